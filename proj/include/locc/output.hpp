#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "locc/config.hpp"
#include "locc/operators.hpp"

namespace locc {

inline constexpr const char* kCodeVersion = "0.1.0";

uint64_t fnv1a(std::string_view bytes);
std::string hex64(uint64_t value);

// One scenario's tabular output plus the metadata needed to reproduce it.
// Every row carries the hash of the resolved config as its last column.
struct ResultRecord {
  std::string scenario;
  std::vector<std::string> columns;        // without the trailing config_hash
  std::vector<std::vector<double>> rows;
  std::string resolved_config;
  uint64_t config_hash = 0;
  uint64_t base_seed = 0;
  double wall_seconds = 0.0;               // diagnostic; not in the CSV
};

ResultRecord make_result_record(const ScenarioConfig& config,
                                std::vector<std::string> columns);

void append_row(ResultRecord& record, std::vector<double> row);

// Standard state columns (negativity, trace, min_eigenvalue) with the row
// invariants enforced: |trace - 1| <= 1e-8, min eigenvalue >= -1e-6,
// negativity >= 0. Returns {negativity, trace, min_eigenvalue}.
std::vector<double> state_columns(const Matrix& rho, const BipartiteSpace& space);

// Deterministic CSV: one header row, "%.17g" doubles, trailing config_hash.
std::string format_csv(const ResultRecord& record);

// Writes the CSV and a JSON sidecar <path>.meta.json containing the resolved
// config, hashes and runtime diagnostics.
void write_result(const ResultRecord& record, const std::string& csv_path);

}  // namespace locc
