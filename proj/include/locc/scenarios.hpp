#pragma once

#include <map>
#include <string>

#include "locc/config.hpp"
#include "locc/output.hpp"

namespace locc {

// A scenario run: the tabular record that goes to disk plus a few summary
// scalars for programmatic checks.
struct ScenarioResult {
  ResultRecord record;
  std::map<std::string, double> summary;
};

ScenarioResult scenario_non_entangling(const ScenarioConfig& config);
ScenarioResult scenario_subthreshold_entanglement(const ScenarioConfig& config);
ScenarioResult scenario_trajectory_equivalence(const ScenarioConfig& config);
ScenarioResult scenario_sse_threshold(const ScenarioConfig& config);
ScenarioResult scenario_least_decoherence_report(const ScenarioConfig& config);

// Dispatch by config.scenario; fills record.wall_seconds.
ScenarioResult run_scenario(const ScenarioConfig& config);

// Default output path: "<scenario>.csv" unless the config names one.
std::string output_path(const ScenarioConfig& config);

// `run <scenario> [--config <path>] [--seed N] [--out <path>] [--threads K]`
// and `scenarios` (list). Exit codes: 0 success, 1 config error, 2 numerical
// failure.
int run_cli(int argc, const char* const* argv);

}  // namespace locc
