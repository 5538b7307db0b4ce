#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "locc/errors.hpp"

namespace locc {

// Minimal TOML-style document: [section] headers, key = value lines,
// # comments. Values: integers, floats, booleans, strings (quoted or bare)
// and flat arrays of numbers. Every key read is tracked; finish() rejects
// anything a scenario did not consume, so typos never pass silently.
class ConfigDoc {
 public:
  static ConfigDoc parse_file(const std::string& path);
  static ConfigDoc parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  long get_int(const std::string& section, const std::string& key, long fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  std::vector<double> get_double_array(const std::string& section, const std::string& key,
                                       const std::vector<double>& fallback);
  std::vector<long> get_int_array(const std::string& section, const std::string& key,
                                  const std::vector<long>& fallback);

  // Throws ConfigError naming the first unconsumed key.
  void finish() const;

 private:
  std::string raw(const std::string& section, const std::string& key) const;
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  mutable std::set<std::string> consumed_;
};

// Fully resolved scenario parameters. Defaults are chosen so every scenario
// runs without a config file.
struct ScenarioConfig {
  std::string scenario;

  // [system]
  std::string kind = "qubits";  // qubits | lattice
  int sites = 4;
  double spacing = 1.0;
  double hopping = 0.5;
  double local_field = 0.0;

  // [potential]
  std::string potential_name = "cosine";  // cosine | delta | power-law | zero | file
  int potential_mode = 1;
  double amplitude = 1.0;
  double exponent = 1.0;
  std::string potential_path;

  // [gamma]
  double gamma = 2.0;

  // [integration]
  double horizon = 10.0;
  int steps = 2000;
  double dt = 1e-3;
  int checkpoints = 20;

  // [ensemble]
  int trajectories = 10000;
  uint64_t base_seed = 12345;

  // [scenario]
  int states = 20;                                       // non-entangling
  std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};  // subthreshold
  std::vector<double> mus = {0.0, 0.5, 1.0, 2.0};             // sse-threshold
  std::vector<long> resolutions = {8, 16, 32, 64};            // least-decoherence
  std::string mode = "monitoring";                            // trajectory-equivalence

  // [output]
  std::string out_path;

  // execution parameter; never part of the resolved config
  int threads = 1;
};

// Names of the registered scenarios, in a stable order.
const std::vector<std::string>& scenario_names();

// Loads and validates the configuration for one scenario. `path` may be
// empty (defaults only). Unknown sections, unknown keys and out-of-range
// values raise ConfigError naming the offending field.
ScenarioConfig load_scenario_config(const std::string& scenario, const std::string& path);

// Same validation applied to an already-parsed document.
ScenarioConfig resolve_scenario_config(const std::string& scenario, ConfigDoc doc);

// Canonical text form of the resolved config: parsing it again reproduces
// the same scenario run. Only the keys the scenario uses are emitted.
std::string resolved_config_text(const ScenarioConfig& config);

}  // namespace locc
