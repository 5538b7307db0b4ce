#include "locc/scenarios.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

#include "locc/gkls.hpp"
#include "locc/potential.hpp"
#include "locc/random.hpp"
#include "locc/stochastic.hpp"

namespace locc {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int threads_of(const ScenarioConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int segment_steps(int steps, int checkpoints) {
  return std::max(1, (steps + checkpoints - 1) / checkpoints);
}

Matrix plus_state_dm() {
  Vector plus(2);
  plus << 1.0, 1.0;
  plus /= std::sqrt(2.0);
  return plus * plus.adjoint();
}

// Nearest-neighbour hopping on the periodic lattice.
Matrix hopping_hamiltonian(int sites, double strength) {
  Matrix h = Matrix::Zero(sites, sites);
  if (sites == 1 || strength == 0.0) return h;
  for (int s = 0; s < sites; ++s) {
    h(s, (s + 1) % sites) += strength;
    h((s + 1) % sites, s) += strength;
  }
  return h;
}

PairPotential build_potential(const ScenarioConfig& cfg, const Lattice& lat) {
  if (cfg.potential_name == "cosine") return cosine_potential(lat, cfg.potential_mode, cfg.amplitude);
  if (cfg.potential_name == "delta") return delta_potential(lat, cfg.amplitude);
  if (cfg.potential_name == "power-law") return power_law_potential(lat, cfg.exponent);
  if (cfg.potential_name == "zero") return zero_potential(lat);
  if (cfg.potential_name == "file") return load_potential(cfg.potential_path, lat);
  throw ConfigError("unknown potential '" + cfg.potential_name + "'");
}

struct LatticeSetup {
  Lattice lat;
  BipartiteSpace space;
  PairPotential pot;
  FourierModes modes;
  std::vector<LocalOperatorPair> decomp;
  Matrix h_a, h_b;
};

LatticeSetup make_lattice_setup(const ScenarioConfig& cfg) {
  LatticeSetup setup;
  setup.lat = make_lattice(cfg.sites, cfg.spacing);
  setup.space = make_bipartite_space(cfg.sites, cfg.sites);
  setup.pot = build_potential(cfg, setup.lat);
  setup.modes = fourier_modes(setup.pot, setup.lat);
  setup.decomp = build_local_operators(setup.modes, setup.lat);
  setup.h_a = hopping_hamiltonian(cfg.sites, cfg.hopping);
  setup.h_b = setup.h_a;
  return setup;
}

// Continuum callback matching the named potential, for the divergence scan.
std::function<double(double)> continuum_potential(const ScenarioConfig& cfg, double period) {
  if (cfg.potential_name == "cosine") {
    const double amp = cfg.amplitude;
    const int mode = cfg.potential_mode;
    return [amp, mode, period](double x) { return amp * std::cos(2.0 * kPi * mode * x / period); };
  }
  if (cfg.potential_name == "delta") {
    const double amp = cfg.amplitude;
    return [amp](double x) { return x == 0.0 ? amp : 0.0; };
  }
  if (cfg.potential_name == "power-law") {
    const double p = cfg.exponent;
    return [p, period](double x) {
      const double r = std::min(x, period - x);
      return 1.0 / std::pow(r, p);  // infinite at r = 0; regularized by the scan
    };
  }
  if (cfg.potential_name == "zero") {
    return [](double) { return 0.0; };
  }
  // file: periodic linear interpolation of the native-resolution table
  const Lattice lat = make_lattice(cfg.sites, cfg.spacing);
  const PairPotential pot = load_potential(cfg.potential_path, lat);
  const int n = lat.sites;
  const double spacing = lat.spacing;
  return [pot, n, spacing](double x) {
    const double u = x / spacing;
    const long lo = static_cast<long>(std::floor(u));
    const double frac = u - static_cast<double>(lo);
    const auto wrap = [n](long v) { return static_cast<size_t>(((v % n) + n) % n); };
    return (1.0 - frac) * pot.values[wrap(lo)] + frac * pot.values[wrap(lo + 1)];
  };
}

}  // namespace

std::string output_path(const ScenarioConfig& cfg) {
  return cfg.out_path.empty() ? cfg.scenario + ".csv" : cfg.out_path;
}

ScenarioResult scenario_non_entangling(const ScenarioConfig& cfg) {
  ScenarioResult out;
  out.record = make_result_record(
      cfg, {"series", "t", "negativity", "trace", "min_eigenvalue"});

  Generator gen;
  BipartiteSpace space;
  if (cfg.kind == "qubits") {
    space = make_bipartite_space(2, 2);
    const Matrix a = lift(sigma_z(), Side::A, space);
    const Matrix b = lift(sigma_z(), Side::B, space);
    const Matrix h = cfg.local_field * (lift(sigma_x(), Side::A, space) +
                                        lift(sigma_x(), Side::B, space));
    RealMatrix gamma(1, 1);
    gamma << cfg.gamma;
    gen = symmetric_feedback_generator(h, {a}, {b}, gamma, gamma);
  } else {
    LatticeSetup setup = make_lattice_setup(cfg);
    space = setup.space;
    gen = pair_potential_generator(setup.h_a, setup.h_b, setup.decomp, cfg.gamma);
  }

  const std::vector<double> times = checkpoint_times(cfg.horizon, cfg.checkpoints);
  const int seg = segment_steps(cfg.steps, cfg.checkpoints);
  double max_neg = 0.0;
  for (int s = 0; s < cfg.states; ++s) {
    Rng rng(trajectory_seed(cfg.base_seed, static_cast<uint64_t>(s)));
    Matrix rho = random_product_state(space, rng);
    for (size_t c = 0; c < times.size(); ++c) {
      if (c > 0) rho = propagate(gen, rho, times[c] - times[c - 1], seg);
      std::vector<double> sc = state_columns(rho, space);
      max_neg = std::max(max_neg, sc[0]);
      append_row(out.record, {static_cast<double>(s), times[c], sc[0], sc[1], sc[2]});
    }
  }
  out.summary["max_negativity"] = max_neg;
  return out;
}

ScenarioResult scenario_subthreshold_entanglement(const ScenarioConfig& cfg) {
  ScenarioResult out;
  out.record = make_result_record(
      cfg, {"series", "t", "negativity", "trace", "min_eigenvalue", "lambda"});

  const BipartiteSpace space = make_bipartite_space(2, 2);
  const Matrix a = lift(sigma_z(), Side::A, space);
  const Matrix b = lift(sigma_z(), Side::B, space);
  const Matrix h = cfg.local_field * (lift(sigma_x(), Side::A, space) +
                                      lift(sigma_x(), Side::B, space));
  RealMatrix gamma(1, 1);
  gamma << cfg.gamma;
  const SymmetricFeedbackParts parts = symmetric_feedback_parts(h, {a}, {b}, gamma, gamma);
  const Matrix rho0 = tensor(plus_state_dm(), plus_state_dm());

  const std::vector<double> times = checkpoint_times(cfg.horizon, cfg.checkpoints);
  const int seg = segment_steps(cfg.steps, cfg.checkpoints);
  std::vector<double> max_neg(cfg.lambdas.size(), 0.0);
  for (size_t li = 0; li < cfg.lambdas.size(); ++li) {
    const double lambda = cfg.lambdas[li];
    const Generator gen{parts.hamiltonian_superop +
                            lambda * (parts.dissipator_a + parts.dissipator_b),
                        parts.dim};
    Matrix rho = rho0;
    for (size_t c = 0; c < times.size(); ++c) {
      if (c > 0) rho = propagate(gen, rho, times[c] - times[c - 1], seg);
      std::vector<double> sc = state_columns(rho, space);
      max_neg[li] = std::max(max_neg[li], sc[0]);
      append_row(out.record, {static_cast<double>(li), times[c], sc[0], sc[1], sc[2], lambda});
    }
    out.summary["max_negativity_lambda" + std::to_string(li)] = max_neg[li];
  }
  bool monotone = true;
  for (size_t li = 1; li < max_neg.size(); ++li) {
    if (max_neg[li] > max_neg[li - 1] + 1e-9) monotone = false;
  }
  out.summary["monotone"] = monotone ? 1.0 : 0.0;
  out.summary["final_negativity_series0"] =
      out.record.rows.empty() ? 0.0 : out.record.rows[times.size() - 1][2];
  return out;
}

ScenarioResult scenario_trajectory_equivalence(const ScenarioConfig& cfg) {
  ScenarioResult out;
  out.record = make_result_record(
      cfg, {"t", "trace_distance", "td_sem", "negativity", "trace", "min_eigenvalue",
            "observable_mean", "observable_sem"});

  const std::vector<double> times = checkpoint_times(cfg.horizon, cfg.checkpoints);
  const SchemeConfig scheme{cfg.dt, Scheme::ItoEuler, true};

  BipartiteSpace space;
  Matrix rho0;
  Matrix observable;
  Generator reference;
  TrajectoryFn trajectory;

  // Initial states are mixed (or diagonal in the monitored basis) so the
  // Euler-Maruyama trajectories stay positive at the default step size.
  Matrix diag_state(2, 2);
  diag_state << 0.7, 0.0, 0.0, 0.3;
  Matrix mixed_x(2, 2);
  mixed_x << 0.5, 0.25, 0.25, 0.5;

  if (cfg.mode == "monitoring") {
    space = make_bipartite_space(2, 1);
    const Matrix h = sigma_z() + cfg.local_field * sigma_x();
    RealMatrix gamma(1, 1);
    gamma << cfg.gamma;
    SmeContext cx = make_sme_context(h, MonitoringSpec{{sigma_z()}, gamma});
    reference = cx.deterministic;
    rho0 = diag_state;
    observable = sigma_z();
    trajectory = sme_trajectory(cx, rho0, cfg.horizon, scheme, cfg.checkpoints);
  } else {
    space = make_bipartite_space(2, 2);
    const Matrix a = lift(sigma_z(), Side::A, space);
    const Matrix h = cfg.local_field * (lift(sigma_x(), Side::A, space) +
                                        lift(sigma_x(), Side::B, space));
    RealMatrix gamma(1, 1);
    gamma << cfg.gamma;
    observable = lift(sigma_z(), Side::A, space);
    if (cfg.mode == "oneway") {
      Matrix ket0(2, 2);
      ket0 << 1.0, 0.0, 0.0, 0.0;
      rho0 = tensor(diag_state, ket0);
      const Matrix b = lift(sigma_x(), Side::B, space);
      FeedbackContext cx = make_oneway_feedback_context(h, {a}, {b}, gamma);
      reference = cx.averaged;
      trajectory = feedback_trajectory(cx, rho0, cfg.horizon, scheme, cfg.checkpoints);
    } else {
      rho0 = tensor(mixed_x, mixed_x);
      const Matrix b = lift(sigma_z(), Side::B, space);
      FeedbackContext cx = make_symmetric_feedback_context(h, {a}, {b}, gamma, gamma);
      reference = cx.averaged;
      trajectory = feedback_trajectory(cx, rho0, cfg.horizon, scheme, cfg.checkpoints);
    }
  }

  // deterministic reference at the checkpoints
  std::vector<Matrix> ref_states{rho0};
  const int seg = segment_steps(cfg.steps, cfg.checkpoints);
  for (size_t c = 1; c < times.size(); ++c) {
    ref_states.push_back(propagate(reference, ref_states.back(), times[c] - times[c - 1], seg));
  }

  EnsembleSpec es;
  es.trajectories = cfg.trajectories;
  es.base_seed = cfg.base_seed;
  es.threads = threads_of(cfg);
  es.times = times;
  const EnsembleResult ens = run_ensemble(trajectory, es, &observable);

  double max_td = 0.0;
  for (size_t c = 0; c < times.size(); ++c) {
    const Matrix& mean = ens.mean_states[c];
    const double td = trace_distance(mean, ref_states[c]);
    const double td_sem = jackknife_sem(ens, static_cast<int>(c), [&](const Matrix& m) {
      return trace_distance(m, ref_states[c]);
    });
    max_td = std::max(max_td, td);
    std::vector<double> sc = state_columns(mean, space);
    append_row(out.record, {times[c], td, td_sem, sc[0], sc[1], sc[2],
                            ens.observable_mean[c], ens.observable_sem[c]});
  }
  out.summary["trace_distance_final"] = out.record.rows.back()[1];
  out.summary["td_sem_final"] = out.record.rows.back()[2];
  out.summary["max_trace_distance"] = max_td;
  return out;
}

ScenarioResult scenario_sse_threshold(const ScenarioConfig& cfg) {
  ScenarioResult out;
  out.record = make_result_record(
      cfg, {"series", "t", "negativity", "neg_sem", "trace_distance_ref", "trace",
            "min_eigenvalue", "mu"});

  LatticeSetup setup = make_lattice_setup(cfg);
  const BipartiteSpace space = setup.space;
  const Matrix v_op = reconstruct_potential(setup.decomp, space);
  const Matrix h_total =
      lift(setup.h_a, Side::A, space) + lift(setup.h_b, Side::B, space) + v_op;
  const DecoherenceKernel kernel = decoherence_kernel(setup.modes, setup.lat);

  // least-decoherence reference dynamics (per-mode rate 2)
  const Generator reference = pair_potential_generator(setup.h_a, setup.h_b, setup.decomp, 2.0);
  const std::vector<double> times = checkpoint_times(cfg.horizon, cfg.checkpoints);
  std::vector<Matrix> ref_states;
  {
    Vector psi0(space.total());
    psi0.setConstant(Complex(1.0 / std::sqrt(double(space.total())), 0.0));
    ref_states.push_back(psi0 * psi0.adjoint());
  }
  const int seg = segment_steps(cfg.steps, cfg.checkpoints);
  for (size_t c = 1; c < times.size(); ++c) {
    ref_states.push_back(propagate(reference, ref_states.back(), times[c] - times[c - 1], seg));
  }

  // designated observable: the first cosine mode on Alice's lattice
  Eigen::VectorXd cosine(setup.lat.sites);
  for (int s = 0; s < setup.lat.sites; ++s) {
    cosine(s) = std::cos(2.0 * kPi * s / setup.lat.sites);
  }
  const Matrix observable =
      lift(Matrix(cosine.cast<Complex>().asDiagonal()), Side::A, space);

  Vector psi0(space.total());
  psi0.setConstant(Complex(1.0 / std::sqrt(double(space.total())), 0.0));
  const SchemeConfig scheme{cfg.dt, Scheme::StratonovichHeun, true};

  for (size_t mi = 0; mi < cfg.mus.size(); ++mi) {
    const double mu = cfg.mus[mi];
    std::vector<double> scaled(kernel.values.size());
    for (size_t i = 0; i < scaled.size(); ++i) scaled[i] = mu * kernel.values[i];
    const RealMatrix cov = circulant(scaled);
    const SseContext cx = make_sse_context(h_total, cov, cov, space);

    EnsembleSpec es;
    es.trajectories = cfg.trajectories;
    es.base_seed = cfg.base_seed;
    es.threads = threads_of(cfg);
    es.times = times;
    const EnsembleResult ens = run_ensemble(
        sse_trajectory(cx, psi0, cfg.horizon, scheme, cfg.checkpoints), es, &observable);

    double max_neg = 0.0, max_excess = -1.0, final_td = 0.0;
    for (size_t c = 0; c < times.size(); ++c) {
      const Matrix& mean = ens.mean_states[c];
      const double neg_sem = jackknife_sem(
          ens, static_cast<int>(c), [&](const Matrix& m) { return negativity(m, space); });
      const double td = trace_distance(mean, ref_states[c]);
      std::vector<double> sc = state_columns(mean, space);
      max_neg = std::max(max_neg, sc[0]);
      max_excess = std::max(max_excess, sc[0] - neg_sem);
      final_td = td;
      append_row(out.record, {static_cast<double>(mi), times[c], sc[0], neg_sem, td,
                              sc[1], sc[2], mu});
    }
    const std::string tag = std::to_string(mi);
    out.summary["max_negativity_mu" + tag] = max_neg;
    out.summary["max_negativity_minus_sem_mu" + tag] = max_excess;
    out.summary["final_trace_distance_mu" + tag] = final_td;
  }
  return out;
}

ScenarioResult scenario_least_decoherence_report(const ScenarioConfig& cfg) {
  ScenarioResult out;
  // section codes: 0 minimizer, 1 cost curve, 2 modes, 3 kernel, 4 divergence scan
  out.record = make_result_record(cfg, {"section", "index", "a", "b", "c"});

  const Lattice lat = make_lattice(cfg.sites, cfg.spacing);
  const PairPotential pot = build_potential(cfg, lat);
  const FourierModes modes = fourier_modes(pot, lat);
  const DecoherenceKernel kernel = decoherence_kernel(modes, lat);
  const LeastDecoherence ld = least_decoherence_rate();

  append_row(out.record, {0.0, 0.0, ld.gamma_numeric, ld.cost_numeric, ld.gamma_star});

  const int curve_points = 25;
  for (int i = 0; i < curve_points; ++i) {
    const double lg = -3.0 + 6.0 * i / (curve_points - 1);
    const double gamma = std::pow(10.0, lg);
    append_row(out.record, {1.0, static_cast<double>(i), gamma, decoherence_cost(gamma), 0.0});
  }

  bool modes_nonneg = true;
  for (int m = 0; m < lat.mode_count(); ++m) {
    const double v = modes.v[static_cast<size_t>(m)];
    if (v < -1e-12) modes_nonneg = false;
    append_row(out.record, {2.0, static_cast<double>(m), lat.wavenumber(m), v,
                            std::abs(v) / 2.0});
  }

  double kernel_gap = 0.0;
  for (int d = 0; d < lat.sites; ++d) {
    const double vd = pot.values[static_cast<size_t>(d)];
    const double kd = kernel.values[static_cast<size_t>(d)];
    kernel_gap = std::max(kernel_gap, std::abs(vd - kd));
    append_row(out.record, {3.0, static_cast<double>(d), vd, kd, std::abs(vd - kd)});
  }

  std::vector<int> resolutions(cfg.resolutions.begin(), cfg.resolutions.end());
  const auto scan = divergence_scan(continuum_potential(cfg, lat.period()), resolutions,
                                    lat.period());
  bool increasing = true;
  for (size_t i = 0; i < scan.size(); ++i) {
    if (i > 0 && scan[i].kernel_diag <= scan[i - 1].kernel_diag) increasing = false;
    append_row(out.record,
               {4.0, static_cast<double>(scan[i].sites), scan[i].kernel_diag, 0.0, 0.0});
  }

  out.summary["gamma_star"] = ld.gamma_star;
  out.summary["cost_star"] = ld.cost_star;
  out.summary["gamma_numeric"] = ld.gamma_numeric;
  out.summary["cost_numeric"] = ld.cost_numeric;
  out.summary["kernel_gap"] = kernel_gap;
  out.summary["kernel_equals_potential"] = kernel_gap <= 1e-10 ? 1.0 : 0.0;
  out.summary["modes_nonnegative"] = modes_nonneg ? 1.0 : 0.0;
  out.summary["scan_strictly_increasing"] = increasing ? 1.0 : 0.0;
  out.summary["kernel_diag"] = kernel.diag;
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  if (cfg.scenario == "non-entangling") {
    result = scenario_non_entangling(cfg);
  } else if (cfg.scenario == "subthreshold-entanglement") {
    result = scenario_subthreshold_entanglement(cfg);
  } else if (cfg.scenario == "trajectory-equivalence") {
    result = scenario_trajectory_equivalence(cfg);
  } else if (cfg.scenario == "sse-threshold") {
    result = scenario_sse_threshold(cfg);
  } else if (cfg.scenario == "least-decoherence-report") {
    result = scenario_least_decoherence_report(cfg);
  } else {
    std::string names;
    for (const auto& name : scenario_names()) names += " " + name;
    throw ConfigError("unknown scenario '" + cfg.scenario + "'; valid scenarios:" + names);
  }
  const auto stop = std::chrono::steady_clock::now();
  result.record.wall_seconds = std::chrono::duration<double>(stop - start).count();
  return result;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"continuous-time LOCC dynamics on bipartite quantum systems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a named scenario");
  std::string scenario, config_path, out_path;
  long long seed = -1;
  int threads = 0;
  run->add_option("scenario", scenario, "scenario name")->required();
  run->add_option("--config", config_path, "TOML-style config file");
  run->add_option("--seed", seed, "override ensemble.base_seed");
  run->add_option("--out", out_path, "output CSV path (metadata goes to <out>.meta.json)");
  run->add_option("--threads", threads, "worker threads, 0 = all hardware threads");

  auto* list = app.add_subcommand("scenarios", "list registered scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (list->parsed()) {
    for (const auto& name : scenario_names()) std::cout << name << "\n";
    return 0;
  }

  try {
    ScenarioConfig cfg = load_scenario_config(scenario, config_path);
    if (seed >= 0) cfg.base_seed = static_cast<uint64_t>(seed);
    if (!out_path.empty()) cfg.out_path = out_path;
    cfg.threads = threads;
    const ScenarioResult result = run_scenario(cfg);
    write_result(result.record, output_path(cfg));
    std::cout << "wrote " << output_path(cfg) << " (" << result.record.rows.size()
              << " rows)\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace locc
