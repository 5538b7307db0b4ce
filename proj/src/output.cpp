#include "locc/output.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace locc {

uint64_t fnv1a(std::string_view bytes) {
  uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

std::string hex64(uint64_t value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

ResultRecord make_result_record(const ScenarioConfig& config,
                                std::vector<std::string> columns) {
  ResultRecord record;
  record.scenario = config.scenario;
  record.columns = std::move(columns);
  record.resolved_config = resolved_config_text(config);
  record.config_hash = fnv1a(record.resolved_config);
  record.base_seed = config.base_seed;
  return record;
}

void append_row(ResultRecord& record, std::vector<double> row) {
  if (row.size() != record.columns.size()) {
    throw DimensionError("result row has " + std::to_string(row.size()) +
                         " values for " + std::to_string(record.columns.size()) + " columns");
  }
  record.rows.push_back(std::move(row));
}

std::vector<double> state_columns(const Matrix& rho, const BipartiteSpace& space) {
  const double neg = negativity(rho, space);
  const double tr = rho.trace().real();
  const double lo = min_eigenvalue(rho);
  if (std::abs(tr - 1.0) > 1e-8) {
    throw NumericalError("emitted state trace off by " + std::to_string(tr - 1.0));
  }
  if (lo < -1e-6) {
    throw NumericalError("emitted state min eigenvalue " + std::to_string(lo));
  }
  return {neg, tr, lo};
}

std::string format_csv(const ResultRecord& record) {
  std::string out;
  for (const auto& col : record.columns) {
    out += col;
    out += ',';
  }
  out += "config_hash\n";
  const std::string hash = hex64(record.config_hash);
  char buf[64];
  for (const auto& row : record.rows) {
    for (double value : row) {
      std::snprintf(buf, sizeof(buf), "%.17g", value);
      out += buf;
      out += ',';
    }
    out += hash;
    out += '\n';
  }
  return out;
}

void write_result(const ResultRecord& record, const std::string& csv_path) {
  const std::string csv = format_csv(record);
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + csv_path);
    out << csv;
  }
  nlohmann::json meta;
  meta["scenario"] = record.scenario;
  meta["code_version"] = kCodeVersion;
  meta["base_seed"] = record.base_seed;
  meta["resolved_config"] = record.resolved_config;
  meta["config_hash"] = hex64(record.config_hash);
  meta["csv_path"] = csv_path;
  meta["csv_checksum"] = hex64(fnv1a(csv));
  meta["rows"] = record.rows.size();
  meta["columns"] = record.columns;
  meta["wall_seconds"] = record.wall_seconds;
  std::ofstream out(csv_path + ".meta.json");
  if (!out) throw ConfigError("cannot write metadata file: " + csv_path + ".meta.json");
  out << meta.dump(2) << "\n";
}

}  // namespace locc
