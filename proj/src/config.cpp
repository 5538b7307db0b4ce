#include "locc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace locc {

namespace {

const std::set<std::string> kKnownSections = {"system",  "potential", "gamma",
                                              "integration", "ensemble", "scenario",
                                              "output"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& text, const std::string& field) {
  try {
    size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError("field '" + field + "': expected a number, got '" + text + "'");
  }
}

}  // namespace

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigDoc ConfigDoc::parse_string(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!kKnownSections.count(section)) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    auto& sec = doc.sections_[section];
    if (sec.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    sec[key] = value;
  }
  return doc;
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto sec = sections_.find(section);
  return sec != sections_.end() && sec->second.count(key) > 0;
}

std::string ConfigDoc::raw(const std::string& section, const std::string& key) const {
  consumed_.insert(section + "." + key);
  return sections_.at(section).at(key);
}

long ConfigDoc::get_int(const std::string& section, const std::string& key, long fallback) {
  if (!has(section, key)) return fallback;
  const std::string field = section + "." + key;
  const double value = parse_number(raw(section, key), field);
  const long rounded = std::lround(value);
  if (std::abs(value - rounded) > 1e-12) {
    throw ConfigError("field '" + field + "': expected an integer");
  }
  return rounded;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) {
  if (!has(section, key)) return fallback;
  return parse_number(raw(section, key), section + "." + key);
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key, bool fallback) {
  if (!has(section, key)) return fallback;
  const std::string value = raw(section, key);
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("field '" + section + "." + key + "': expected true or false");
}

std::string ConfigDoc::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) {
  if (!has(section, key)) return fallback;
  return raw(section, key);
}

std::vector<double> ConfigDoc::get_double_array(const std::string& section,
                                                const std::string& key,
                                                const std::vector<double>& fallback) {
  if (!has(section, key)) return fallback;
  const std::string field = section + "." + key;
  std::string value = raw(section, key);
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
    throw ConfigError("field '" + field + "': expected an array like [1, 2, 3]");
  }
  value = value.substr(1, value.size() - 2);
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("field '" + field + "': empty array element");
    out.push_back(parse_number(item, field));
  }
  return out;
}

std::vector<long> ConfigDoc::get_int_array(const std::string& section, const std::string& key,
                                           const std::vector<long>& fallback) {
  if (!has(section, key)) return fallback;
  std::vector<double> values = get_double_array(section, key, {});
  std::vector<long> out;
  for (double v : values) {
    const long rounded = std::lround(v);
    if (std::abs(v - rounded) > 1e-12) {
      throw ConfigError("field '" + section + "." + key + "': expected integers");
    }
    out.push_back(rounded);
  }
  return out;
}

void ConfigDoc::finish() const {
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, value] : keys) {
      const std::string field = section + "." + key;
      if (!consumed_.count(field)) {
        throw ConfigError(origin_ + ": unknown key '" + field + "' for this scenario");
      }
    }
  }
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "non-entangling", "subthreshold-entanglement", "trajectory-equivalence",
      "sse-threshold", "least-decoherence-report"};
  return names;
}

namespace {

void require_positive(double value, const std::string& field) {
  if (!(value > 0.0)) {
    throw ConfigError("field '" + field + "' must be positive, got " + std::to_string(value));
  }
}

void require_positive_int(long value, const std::string& field) {
  if (value < 1) {
    throw ConfigError("field '" + field + "' must be >= 1, got " + std::to_string(value));
  }
}

void read_system(ConfigDoc& doc, ScenarioConfig& cfg, bool allow_lattice) {
  cfg.kind = doc.get_string("system", "kind", cfg.kind);
  if (cfg.kind != "qubits" && cfg.kind != "lattice") {
    throw ConfigError("field 'system.kind' must be 'qubits' or 'lattice'");
  }
  if (!allow_lattice && cfg.kind == "lattice") {
    throw ConfigError("field 'system.kind': scenario '" + cfg.scenario +
                      "' supports only 'qubits'");
  }
  cfg.local_field = doc.get_double("system", "local_field", cfg.local_field);
  if (cfg.kind == "lattice") {
    cfg.sites = static_cast<int>(doc.get_int("system", "sites", cfg.sites));
    require_positive_int(cfg.sites, "system.sites");
    if (cfg.sites < 2) throw ConfigError("field 'system.sites' must be >= 2");
    cfg.spacing = doc.get_double("system", "spacing", cfg.spacing);
    require_positive(cfg.spacing, "system.spacing");
    cfg.hopping = doc.get_double("system", "hopping", cfg.hopping);
  }
}

void read_potential(ConfigDoc& doc, ScenarioConfig& cfg) {
  cfg.potential_name = doc.get_string("potential", "name", cfg.potential_name);
  const std::set<std::string> known = {"cosine", "delta", "power-law", "zero", "file"};
  if (!known.count(cfg.potential_name)) {
    throw ConfigError("field 'potential.name': unknown potential '" + cfg.potential_name + "'");
  }
  cfg.potential_mode = static_cast<int>(doc.get_int("potential", "mode", cfg.potential_mode));
  if (cfg.potential_mode < 0) throw ConfigError("field 'potential.mode' must be >= 0");
  cfg.amplitude = doc.get_double("potential", "amplitude", cfg.amplitude);
  cfg.exponent = doc.get_double("potential", "exponent", cfg.exponent);
  require_positive(cfg.exponent, "potential.exponent");
  cfg.potential_path = doc.get_string("potential", "path", cfg.potential_path);
  if (cfg.potential_name == "file" && cfg.potential_path.empty()) {
    throw ConfigError("field 'potential.path' required when potential.name = file");
  }
}

void read_gamma(ConfigDoc& doc, ScenarioConfig& cfg) {
  cfg.gamma = doc.get_double("gamma", "value", cfg.gamma);
  require_positive(cfg.gamma, "gamma.value");
}

void read_integration(ConfigDoc& doc, ScenarioConfig& cfg, bool stochastic) {
  cfg.horizon = doc.get_double("integration", "t", cfg.horizon);
  require_positive(cfg.horizon, "integration.t");
  cfg.steps = static_cast<int>(doc.get_int("integration", "steps", cfg.steps));
  require_positive_int(cfg.steps, "integration.steps");
  cfg.checkpoints = static_cast<int>(doc.get_int("integration", "checkpoints", cfg.checkpoints));
  require_positive_int(cfg.checkpoints, "integration.checkpoints");
  if (stochastic) {
    cfg.dt = doc.get_double("integration", "dt", cfg.dt);
    require_positive(cfg.dt, "integration.dt");
  }
}

void read_ensemble(ConfigDoc& doc, ScenarioConfig& cfg, bool trajectories_used) {
  if (trajectories_used) {
    cfg.trajectories =
        static_cast<int>(doc.get_int("ensemble", "trajectories", cfg.trajectories));
    require_positive_int(cfg.trajectories, "ensemble.trajectories");
  }
  cfg.base_seed = static_cast<uint64_t>(doc.get_int("ensemble", "base_seed",
                                                    static_cast<long>(cfg.base_seed)));
}

void read_output(ConfigDoc& doc, ScenarioConfig& cfg) {
  cfg.out_path = doc.get_string("output", "path", cfg.out_path);
}

}  // namespace

ScenarioConfig resolve_scenario_config(const std::string& scenario, ConfigDoc doc) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;

  if (scenario == "non-entangling") {
    read_system(doc, cfg, /*allow_lattice=*/true);
    if (cfg.kind == "lattice") read_potential(doc, cfg);
    read_gamma(doc, cfg);
    read_integration(doc, cfg, /*stochastic=*/false);
    read_ensemble(doc, cfg, /*trajectories_used=*/false);
    cfg.states = static_cast<int>(doc.get_int("scenario", "states", cfg.states));
    require_positive_int(cfg.states, "scenario.states");
    read_output(doc, cfg);
  } else if (scenario == "subthreshold-entanglement") {
    cfg.horizon = 2.0;  // default horizon for the sweep
    read_system(doc, cfg, /*allow_lattice=*/false);
    read_gamma(doc, cfg);
    read_integration(doc, cfg, /*stochastic=*/false);
    read_ensemble(doc, cfg, /*trajectories_used=*/false);
    cfg.lambdas = doc.get_double_array("scenario", "lambdas", cfg.lambdas);
    if (cfg.lambdas.empty()) throw ConfigError("field 'scenario.lambdas' must not be empty");
    for (double l : cfg.lambdas) {
      if (l < 0.0 || l > 1.0) {
        throw ConfigError("field 'scenario.lambdas': value " + std::to_string(l) +
                          " outside [0, 1]");
      }
    }
    read_output(doc, cfg);
  } else if (scenario == "trajectory-equivalence") {
    cfg.horizon = 1.0;
    read_system(doc, cfg, /*allow_lattice=*/false);
    read_gamma(doc, cfg);
    read_integration(doc, cfg, /*stochastic=*/true);
    read_ensemble(doc, cfg, /*trajectories_used=*/true);
    cfg.mode = doc.get_string("scenario", "mode", cfg.mode);
    if (cfg.mode != "monitoring" && cfg.mode != "oneway" && cfg.mode != "symmetric") {
      throw ConfigError("field 'scenario.mode' must be monitoring, oneway or symmetric");
    }
    read_output(doc, cfg);
  } else if (scenario == "sse-threshold") {
    cfg.kind = "lattice";
    cfg.horizon = 1.0;
    cfg.dt = 1e-4;  // keeps the Heun norm drift inside its guard up to mu = 2
    cfg.trajectories = 2000;
    read_system(doc, cfg, /*allow_lattice=*/true);
    if (cfg.kind != "lattice") {
      throw ConfigError("field 'system.kind': sse-threshold requires 'lattice'");
    }
    read_potential(doc, cfg);
    read_gamma(doc, cfg);
    read_integration(doc, cfg, /*stochastic=*/true);
    read_ensemble(doc, cfg, /*trajectories_used=*/true);
    cfg.mus = doc.get_double_array("scenario", "mus", cfg.mus);
    if (cfg.mus.empty()) throw ConfigError("field 'scenario.mus' must not be empty");
    for (double m : cfg.mus) {
      if (m < 0.0) {
        throw ConfigError("field 'scenario.mus': value " + std::to_string(m) + " negative");
      }
    }
    read_output(doc, cfg);
  } else if (scenario == "least-decoherence-report") {
    cfg.kind = "lattice";
    read_system(doc, cfg, /*allow_lattice=*/true);
    if (cfg.kind != "lattice") {
      throw ConfigError("field 'system.kind': least-decoherence-report requires 'lattice'");
    }
    cfg.sites = static_cast<int>(doc.get_int("system", "sites", 8));
    read_potential(doc, cfg);
    cfg.resolutions = doc.get_int_array("scenario", "resolutions", cfg.resolutions);
    if (cfg.resolutions.empty()) {
      throw ConfigError("field 'scenario.resolutions' must not be empty");
    }
    for (long r : cfg.resolutions) {
      if (r < 2) throw ConfigError("field 'scenario.resolutions': resolution must be >= 2");
    }
    read_ensemble(doc, cfg, /*trajectories_used=*/false);
    read_output(doc, cfg);
  } else {
    std::string names;
    for (const auto& name : scenario_names()) names += " " + name;
    throw ConfigError("unknown scenario '" + scenario + "'; valid scenarios:" + names);
  }

  doc.finish();
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& scenario, const std::string& path) {
  ConfigDoc doc = path.empty() ? ConfigDoc::parse_string("", "<defaults>")
                               : ConfigDoc::parse_file(path);
  return resolve_scenario_config(scenario, std::move(doc));
}

namespace {
std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}
}  // namespace

std::string resolved_config_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  const std::string& s = cfg.scenario;
  out << "[system]\n";
  out << "kind = \"" << cfg.kind << "\"\n";
  out << "local_field = " << fmt(cfg.local_field) << "\n";
  if (cfg.kind == "lattice") {
    out << "sites = " << cfg.sites << "\n";
    out << "spacing = " << fmt(cfg.spacing) << "\n";
    if (s != "least-decoherence-report") out << "hopping = " << fmt(cfg.hopping) << "\n";
  }
  if (cfg.kind == "lattice") {
    out << "\n[potential]\n";
    out << "name = \"" << cfg.potential_name << "\"\n";
    out << "mode = " << cfg.potential_mode << "\n";
    out << "amplitude = " << fmt(cfg.amplitude) << "\n";
    out << "exponent = " << fmt(cfg.exponent) << "\n";
    if (!cfg.potential_path.empty()) out << "path = \"" << cfg.potential_path << "\"\n";
  }
  if (s != "least-decoherence-report") {
    out << "\n[gamma]\n";
    out << "value = " << fmt(cfg.gamma) << "\n";
    out << "\n[integration]\n";
    out << "t = " << fmt(cfg.horizon) << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "checkpoints = " << cfg.checkpoints << "\n";
    if (s == "trajectory-equivalence" || s == "sse-threshold") {
      out << "dt = " << fmt(cfg.dt) << "\n";
    }
  }
  out << "\n[ensemble]\n";
  if (s == "trajectory-equivalence" || s == "sse-threshold") {
    out << "trajectories = " << cfg.trajectories << "\n";
  }
  out << "base_seed = " << cfg.base_seed << "\n";
  out << "\n[scenario]\n";
  if (s == "non-entangling") {
    out << "states = " << cfg.states << "\n";
  } else if (s == "subthreshold-entanglement") {
    out << "lambdas = [";
    for (size_t i = 0; i < cfg.lambdas.size(); ++i) {
      out << (i ? ", " : "") << fmt(cfg.lambdas[i]);
    }
    out << "]\n";
  } else if (s == "trajectory-equivalence") {
    out << "mode = \"" << cfg.mode << "\"\n";
  } else if (s == "sse-threshold") {
    out << "mus = [";
    for (size_t i = 0; i < cfg.mus.size(); ++i) out << (i ? ", " : "") << fmt(cfg.mus[i]);
    out << "]\n";
  } else if (s == "least-decoherence-report") {
    out << "resolutions = [";
    for (size_t i = 0; i < cfg.resolutions.size(); ++i) {
      out << (i ? ", " : "") << cfg.resolutions[i];
    }
    out << "]\n";
  }
  return out.str();
}

}  // namespace locc
