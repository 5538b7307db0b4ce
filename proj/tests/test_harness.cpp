#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "locc/config.hpp"
#include "locc/output.hpp"
#include "locc/scenarios.hpp"

using namespace locc;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

ScenarioConfig cheap_monitoring_config(uint64_t seed) {
  ScenarioConfig cfg = load_scenario_config("trajectory-equivalence", "");
  cfg.trajectories = 200;
  cfg.gamma = 0.5;  // keeps the diagonal martingale well inside [0, 1] at this dt
  cfg.horizon = 0.2;
  cfg.dt = 5e-3;
  cfg.steps = 200;
  cfg.checkpoints = 2;
  cfg.base_seed = seed;
  return cfg;
}
}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults resolve for every scenario") {
    for (const auto& name : scenario_names()) {
      CHECK_NOTHROW(load_scenario_config(name, ""));
    }
  }

  SUBCASE("unknown scenario lists the valid ones") {
    try {
      load_scenario_config("frobnicate", "");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("non-entangling") != std::string::npos);
      CHECK(msg.find("sse-threshold") != std::string::npos);
    }
  }

  SUBCASE("unknown keys are rejected by name") {
    ConfigDoc doc = ConfigDoc::parse_string("[gamma]\nvalue = 2.0\ntypo_key = 1\n", "mem");
    try {
      resolve_scenario_config("non-entangling", std::move(doc));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("gamma.typo_key") != std::string::npos);
    }
  }

  SUBCASE("unknown sections are rejected") {
    CHECK_THROWS_AS(ConfigDoc::parse_string("[nonsense]\nx = 1\n", "mem"), ConfigError);
  }

  SUBCASE("lambda outside [0,1] is rejected by field name") {
    ConfigDoc doc = ConfigDoc::parse_string("[scenario]\nlambdas = [0.0, 1.5]\n", "mem");
    try {
      resolve_scenario_config("subthreshold-entanglement", std::move(doc));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("scenario.lambdas") != std::string::npos);
    }
  }

  SUBCASE("value type errors name the field") {
    ConfigDoc doc = ConfigDoc::parse_string("[integration]\nsteps = banana\n", "mem");
    try {
      resolve_scenario_config("non-entangling", std::move(doc));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("integration.steps") != std::string::npos);
    }
  }

  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(ConfigDoc::parse_string("[gamma]\nvalue = 1\nvalue = 2\n", "mem"),
                    ConfigError);
  }

  SUBCASE("negative gamma is rejected") {
    ConfigDoc doc = ConfigDoc::parse_string("[gamma]\nvalue = -2.0\n", "mem");
    CHECK_THROWS_AS(resolve_scenario_config("non-entangling", std::move(doc)), ConfigError);
  }
}

TEST_CASE("resolved config text round-trips") {
  for (const auto& name : scenario_names()) {
    ScenarioConfig cfg = load_scenario_config(name, "");
    const std::string text = resolved_config_text(cfg);
    ScenarioConfig back =
        resolve_scenario_config(name, ConfigDoc::parse_string(text, "roundtrip"));
    CHECK(resolved_config_text(back) == text);
  }
}

TEST_CASE("csv output is deterministic and carries the config hash") {
  ScenarioConfig cfg = cheap_monitoring_config(77);
  cfg.threads = 1;
  const ScenarioResult a = run_scenario(cfg);
  cfg.threads = 2;
  const ScenarioResult b = run_scenario(cfg);
  CHECK(format_csv(a.record) == format_csv(b.record));

  const std::string csv = format_csv(a.record);
  const std::string hash = hex64(a.record.config_hash);
  CHECK(csv.find("config_hash") != std::string::npos);
  CHECK(csv.find(hash) != std::string::npos);
}

TEST_CASE("metadata embeds a config that reproduces the run") {
  ScenarioConfig cfg = cheap_monitoring_config(99);
  cfg.threads = 2;
  const ScenarioResult first = run_scenario(cfg);

  ScenarioConfig again = resolve_scenario_config(
      cfg.scenario, ConfigDoc::parse_string(first.record.resolved_config, "embedded"));
  again.threads = 1;
  const ScenarioResult second = run_scenario(again);
  CHECK(format_csv(first.record) == format_csv(second.record));
}

TEST_CASE("write_result emits csv and json sidecar") {
  ScenarioConfig cfg = cheap_monitoring_config(5);
  cfg.threads = 2;
  const ScenarioResult result = run_scenario(cfg);
  const std::string path = "harness_roundtrip_test.csv";
  write_result(result.record, path);

  std::ifstream csv(path);
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "t,trace_distance,td_sem,negativity,trace,min_eigenvalue,observable_mean,"
        "observable_sem,config_hash");
  std::ifstream meta(path + ".meta.json");
  REQUIRE(meta.good());
  std::string all((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
  CHECK(all.find("resolved_config") != std::string::npos);
  CHECK(all.find("csv_checksum") != std::string::npos);
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}

TEST_CASE("emitted state rows satisfy the row invariants") {
  ScenarioConfig cfg = load_scenario_config("non-entangling", "");
  cfg.states = 3;
  cfg.horizon = 2.0;
  cfg.steps = 400;
  cfg.checkpoints = 5;
  const ScenarioResult result = run_scenario(cfg);
  // columns: series, t, negativity, trace, min_eigenvalue
  for (const auto& row : result.record.rows) {
    CHECK(row[2] >= 0.0);
    CHECK(std::abs(row[3] - 1.0) <= 1e-8);
    CHECK(row[4] >= -1e-6);
  }
}

TEST_CASE("non-entangling scenario: quick qubit and zero-potential checks") {
  SUBCASE("qubit pair at gamma = 2 stays separable") {
    ScenarioConfig cfg = load_scenario_config("non-entangling", "");
    cfg.states = 5;
    cfg.horizon = 3.0;
    cfg.steps = 600;
    cfg.checkpoints = 10;
    const ScenarioResult result = run_scenario(cfg);
    CHECK(result.summary.at("max_negativity") <= 1e-4);
  }

  SUBCASE("zero potential on the lattice keeps negativity at rounding level") {
    ScenarioConfig cfg = load_scenario_config("non-entangling", "");
    cfg.kind = "lattice";
    cfg.sites = 4;
    cfg.potential_name = "zero";
    cfg.states = 3;
    cfg.horizon = 1.0;
    cfg.steps = 1500;  // integrator error must sit below the 1e-12 bound
    cfg.checkpoints = 4;
    const ScenarioResult result = run_scenario(cfg);
    CHECK(result.summary.at("max_negativity") <= 1e-12);
  }
}

TEST_CASE("subthreshold scenario: unitary endpoint value") {
  ScenarioConfig cfg = load_scenario_config("subthreshold-entanglement", "");
  cfg.lambdas = {0.0};
  cfg.horizon = kPi / 4.0;
  cfg.checkpoints = 1;
  cfg.steps = 1000;
  const ScenarioResult result = run_scenario(cfg);
  CHECK(std::abs(result.summary.at("final_negativity_series0") - 0.5) < 1e-6);
}

TEST_CASE("least-decoherence report summaries") {
  SUBCASE("cosine potential: gamma* = 2, kernel equals potential") {
    ScenarioConfig cfg = load_scenario_config("least-decoherence-report", "");
    const ScenarioResult result = run_scenario(cfg);
    CHECK(std::abs(result.summary.at("gamma_numeric") - 2.0) < 1e-9);
    CHECK(std::abs(result.summary.at("cost_numeric") - 0.5) < 1e-12);
    CHECK(result.summary.at("kernel_equals_potential") == 1.0);
    CHECK(result.summary.at("modes_nonnegative") == 1.0);
  }

  SUBCASE("flipped-sign cosine: kernel is the elementwise flip") {
    ScenarioConfig cfg = load_scenario_config("least-decoherence-report", "");
    cfg.amplitude = -1.0;
    const ScenarioResult result = run_scenario(cfg);
    CHECK(result.summary.at("modes_nonnegative") == 0.0);
    CHECK(result.summary.at("kernel_equals_potential") == 0.0);
    // kernel rows: section 3, columns (d, V, kernel, |V - kernel|)
    for (const auto& row : result.record.rows) {
      if (row[0] == 3.0) CHECK(std::abs(row[3] + row[2]) < 1e-12);
    }
  }

  SUBCASE("power-law: kernel diagonal strictly increases with resolution") {
    ScenarioConfig cfg = load_scenario_config("least-decoherence-report", "");
    cfg.potential_name = "power-law";
    const ScenarioResult result = run_scenario(cfg);
    CHECK(result.summary.at("scan_strictly_increasing") == 1.0);
  }
}

TEST_CASE("trajectory equivalence at n = 10 reports honest uncertainty") {
  ScenarioConfig cfg = load_scenario_config("trajectory-equivalence", "");
  cfg.mode = "oneway";
  cfg.trajectories = 10;
  cfg.base_seed = 1;
  cfg.threads = 2;
  const ScenarioResult result = run_scenario(cfg);
  const double gap = result.summary.at("trace_distance_final");
  const double sem = result.summary.at("td_sem_final");
  CHECK(sem > gap);            // at this seed the error bar covers the gap outright
  CHECK(gap <= 5.0 * sem);     // and the gap is never a many-sigma surprise
  CHECK(sem > 5e-2);           // the n = 10 error bar dwarfs the large-n tolerance
}
