#include "locc/stochastic.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

namespace locc {

namespace {
constexpr double kFactorResidualTol = 1e-10;
constexpr double kTrajectoryPositivityFloor = -1e-4;
constexpr double kNormDriftPerUnitTime = 1e-3;

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && std::abs(m(i, j)) > 1e-14) return false;
    }
  }
  return true;
}
}  // namespace

RealMatrix psd_cholesky(const RealMatrix& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw DimensionError("psd_cholesky: matrix must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("psd_cholesky: matrix not symmetric");
  }
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  const double pivot_tol = 1e-12 * scale;
  RealMatrix l = RealMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (d > pivot_tol) {
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < n; ++i) {
        l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
      }
    } else if (d > -pivot_tol) {
      // semidefinite direction: the rest of the column must vanish too
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double r = m(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
        if (std::abs(r) > 1e-8 * scale) {
          throw NumericalError("psd_cholesky: matrix not positive-semidefinite");
        }
      }
    } else {
      throw NumericalError("psd_cholesky: negative pivot " + std::to_string(d));
    }
  }
  return l;
}

NoiseModel make_noise_model(RealMatrix covariance) {
  NoiseModel model;
  model.factor = psd_cholesky(covariance);
  model.covariance = std::move(covariance);
  const double residual =
      (model.factor * model.factor.transpose() - model.covariance).cwiseAbs().maxCoeff();
  if (residual > kFactorResidualTol) {
    throw NumericalError("noise factorization residual " + std::to_string(residual));
  }
  return model;
}

RealMatrix circulant(const std::vector<double>& first_row) {
  const auto n = static_cast<Eigen::Index>(first_row.size());
  RealMatrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = first_row[static_cast<size_t>(((i - j) % n + n) % n)];
    }
  }
  return c;
}

RealVector sample_noise_increments(const NoiseModel& model, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw ConfigError("noise sampling requires dt > 0");
  RealVector z(model.factor.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.gaussian();
  return model.factor * z / std::sqrt(dt);
}

// --- SME --------------------------------------------------------------------

SmeContext make_sme_context(const Matrix& hamiltonian, const MonitoringSpec& spec) {
  validate_monitoring_spec(spec, /*require_invertible=*/true);
  SmeContext cx;
  cx.observables = spec.observables;
  cx.gamma = spec.gamma;
  cx.deterministic = local_monitoring_generator(hamiltonian, spec);
  cx.noise = spec.observables.empty() ? make_noise_model(RealMatrix::Zero(0, 0))
                                      : make_noise_model(pd_inverse(spec.gamma));
  return cx;
}

Matrix sme_step(const Matrix& rho, const SmeContext& cx, double dt, Rng& rng,
                std::vector<double>* signals, bool renormalize, double* trace_drift) {
  const RealVector w = sample_noise_increments(cx.noise, dt, rng);
  const RealVector u = cx.gamma * w;

  Matrix out = rho + dt * apply_generator(cx.deterministic, rho);
  if (signals) signals->resize(cx.observables.size());
  for (size_t j = 0; j < cx.observables.size(); ++j) {
    const Matrix& obs = cx.observables[j];
    const double expect = (obs * rho).trace().real();
    out += (0.5 * u(static_cast<Eigen::Index>(j)) * dt) *
           (anticommutator(obs, rho) - 2.0 * expect * rho);
    if (signals) (*signals)[j] = expect + w(static_cast<Eigen::Index>(j));
  }
  out = (out + out.adjoint()).eval() / 2.0;
  const double tr = out.trace().real();
  if (trace_drift) *trace_drift = std::abs(tr - 1.0);
  if (renormalize) out /= tr;
  return out;
}

// --- Feedback ---------------------------------------------------------------

namespace {
void init_feedback_fast_paths(FeedbackContext& cx) {
  cx.all_diagonal = true;
  for (const auto& op : cx.feedback_ops) {
    if (!is_diagonal(op)) {
      cx.all_diagonal = false;
      break;
    }
  }
  if (!cx.all_diagonal && cx.feedback_ops.size() == 1) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cx.feedback_ops.front());
    if (solver.info() != Eigen::Success) throw NumericalError("feedback operator eig failed");
    cx.single_cached = true;
    cx.cached_evecs = solver.eigenvectors();
    cx.cached_evals = solver.eigenvalues();
  }
}
}  // namespace

FeedbackContext make_oneway_feedback_context(const Matrix& hamiltonian,
                                             const std::vector<Matrix>& a_list,
                                             const std::vector<Matrix>& b_list,
                                             const RealMatrix& gamma_a) {
  if (a_list.size() != b_list.size()) {
    throw DimensionError("monitored and feedback lists differ in length");
  }
  FeedbackContext cx;
  cx.sme = make_sme_context(hamiltonian, MonitoringSpec{a_list, gamma_a});
  cx.feedback_ops = b_list;
  for (const auto& b : b_list) {
    if (!is_hermitian(b)) throw NumericalError("feedback operator not Hermitian");
  }
  cx.averaged = oneway_feedback_generator(hamiltonian, a_list, b_list, gamma_a);
  init_feedback_fast_paths(cx);
  return cx;
}

FeedbackContext make_symmetric_feedback_context(const Matrix& hamiltonian,
                                                const std::vector<Matrix>& a_list,
                                                const std::vector<Matrix>& b_list,
                                                const RealMatrix& gamma_a,
                                                const RealMatrix& gamma_b) {
  if (a_list.size() != b_list.size()) {
    throw DimensionError("observable lists differ in length");
  }
  std::vector<Matrix> monitored = a_list;
  monitored.insert(monitored.end(), b_list.begin(), b_list.end());
  const auto na = static_cast<Eigen::Index>(a_list.size());
  const auto nb = static_cast<Eigen::Index>(b_list.size());
  RealMatrix gamma = RealMatrix::Zero(na + nb, na + nb);
  gamma.topLeftCorner(na, na) = gamma_a;
  gamma.bottomRightCorner(nb, nb) = gamma_b;

  FeedbackContext cx;
  cx.sme = make_sme_context(hamiltonian, MonitoringSpec{monitored, gamma});
  // Alice's signals drive Bob's operators and vice versa.
  cx.feedback_ops = b_list;
  cx.feedback_ops.insert(cx.feedback_ops.end(), a_list.begin(), a_list.end());
  cx.averaged = symmetric_feedback_generator(hamiltonian, a_list, b_list, gamma_a, gamma_b);
  init_feedback_fast_paths(cx);
  return cx;
}

Matrix feedback_trajectory_step(const Matrix& rho, const FeedbackContext& cx, double dt,
                                Rng& rng, bool renormalize, double* trace_drift) {
  std::vector<double> signals;
  Matrix out = sme_step(rho, cx.sme, dt, rng, &signals, renormalize, trace_drift);

  const Eigen::Index d = out.rows();
  if (cx.all_diagonal) {
    Vector phases(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double angle = 0.0;
      for (size_t j = 0; j < cx.feedback_ops.size(); ++j) {
        angle += signals[j] * cx.feedback_ops[j](i, i).real();
      }
      phases(i) = std::polar(1.0, -angle * dt);
    }
    out = phases.asDiagonal() * out * phases.conjugate().asDiagonal();
    return out;
  }
  Matrix unitary;
  if (cx.single_cached) {
    Vector phases(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      phases(i) = std::polar(1.0, -signals[0] * cx.cached_evals(i) * dt);
    }
    unitary = cx.cached_evecs * phases.asDiagonal() * cx.cached_evecs.adjoint();
  } else {
    Matrix exponent = Matrix::Zero(d, d);
    for (size_t j = 0; j < cx.feedback_ops.size(); ++j) {
      exponent += signals[j] * cx.feedback_ops[j];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(exponent);
    if (solver.info() != Eigen::Success) throw NumericalError("feedback exponent eig failed");
    Vector phases(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      phases(i) = std::polar(1.0, -solver.eigenvalues()(i) * dt);
    }
    unitary = solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
  }
  return unitary * out * unitary.adjoint();
}

// --- SSE ---------------------------------------------------------------------

SseContext make_sse_context(const Matrix& h_total, const RealMatrix& site_cov_a,
                            const RealMatrix& site_cov_b, const BipartiteSpace& space) {
  if (h_total.rows() != space.total()) {
    throw DimensionError("SSE Hamiltonian does not match the bipartite space");
  }
  if (site_cov_a.rows() != space.dim_a || site_cov_b.rows() != space.dim_b) {
    throw DimensionError("site covariance does not match the lattice dimensions");
  }
  if (!is_hermitian(h_total)) throw NumericalError("SSE Hamiltonian not Hermitian");
  SseContext cx;
  cx.h_total = h_total;
  cx.noise_a = make_noise_model(site_cov_a);
  cx.noise_b = make_noise_model(site_cov_b);
  cx.space = space;
  return cx;
}

Vector sse_stratonovich_step(const Vector& psi, const SseContext& cx, double dt, Rng& rng,
                             bool renormalize, double* norm_drift) {
  const int da = cx.space.dim_a, db = cx.space.dim_b;
  const RealVector xi_a = sample_noise_increments(cx.noise_a, dt, rng);
  const RealVector xi_b = sample_noise_increments(cx.noise_b, dt, rng);
  Vector field(da * db);
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < db; ++j) field(i * db + j) = Complex(xi_a(i) + xi_b(j), 0.0);
  }
  const Complex minus_i(0, -1);
  Vector k1 = minus_i * (cx.h_total * psi + field.cwiseProduct(psi));
  Vector mid = psi + dt * k1;
  Vector k2 = minus_i * (cx.h_total * mid + field.cwiseProduct(mid));
  Vector out = psi + (dt / 2.0) * (k1 + k2);
  const double norm = out.norm();
  if (norm_drift) *norm_drift = std::abs(norm - 1.0);
  if (renormalize) out /= norm;
  return out;
}

// --- Ensembles ----------------------------------------------------------------

std::vector<double> checkpoint_times(double t, int checkpoints) {
  if (checkpoints < 1) throw ConfigError("need at least one checkpoint");
  std::vector<double> times(static_cast<size_t>(checkpoints) + 1);
  for (int c = 0; c <= checkpoints; ++c) times[static_cast<size_t>(c)] = t * c / checkpoints;
  return times;
}

namespace {
// Fixed chunking (a function of n only) keeps the reduction order independent
// of the thread count.
int ensemble_chunk_size(int n) { return n <= 1024 ? std::max(1, n / 16) : 64; }
}  // namespace

EnsembleResult run_ensemble(const TrajectoryFn& trajectory, const EnsembleSpec& spec,
                            const Matrix* observable) {
  if (spec.trajectories < 1) throw ConfigError("ensemble needs at least one trajectory");
  if (spec.times.empty()) throw ConfigError("ensemble needs checkpoint times");
  const int n = spec.trajectories;
  const int chunk = ensemble_chunk_size(n);
  const int n_chunks = (n + chunk - 1) / chunk;
  const auto n_times = spec.times.size();

  EnsembleResult result;
  result.trajectories = n;
  result.base_seed = spec.base_seed;
  result.times = spec.times;
  result.chunk_sums.assign(static_cast<size_t>(n_chunks), {});
  result.chunk_counts.assign(static_cast<size_t>(n_chunks), 0);

  std::vector<std::vector<double>> chunk_obs_sum(
      static_cast<size_t>(n_chunks), std::vector<double>(n_times, 0.0));
  std::vector<std::vector<double>> chunk_obs_sq(
      static_cast<size_t>(n_chunks), std::vector<double>(n_times, 0.0));

  std::atomic<int> next_chunk{0};
  std::mutex error_mutex;
  std::string first_error;
  long first_error_index = -1;

  auto worker = [&]() {
    for (;;) {
      const int c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      const int begin = c * chunk;
      const int end = std::min(n, begin + chunk);
      std::vector<Matrix> sum;
      std::vector<double>& obs_sum = chunk_obs_sum[static_cast<size_t>(c)];
      std::vector<double>& obs_sq = chunk_obs_sq[static_cast<size_t>(c)];
      for (int i = begin; i < end; ++i) {
        std::vector<Matrix> states;
        try {
          states = trajectory(trajectory_seed(spec.base_seed, static_cast<uint64_t>(i)));
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error_index < 0 || i < first_error_index) {
            first_error_index = i;
            first_error = e.what();
          }
          return;
        }
        if (states.size() != n_times) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error_index < 0) {
            first_error_index = i;
            first_error = "trajectory returned wrong checkpoint count";
          }
          return;
        }
        if (sum.empty()) {
          sum = states;
        } else {
          for (size_t k = 0; k < n_times; ++k) sum[k] += states[k];
        }
        if (observable) {
          for (size_t k = 0; k < n_times; ++k) {
            const double o = ((*observable) * states[k]).trace().real();
            obs_sum[k] += o;
            obs_sq[k] += o * o;
          }
        }
      }
      result.chunk_sums[static_cast<size_t>(c)] = std::move(sum);
      result.chunk_counts[static_cast<size_t>(c)] = end - begin;
    }
  };

  const int threads = std::max(1, spec.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error_index >= 0) {
    throw NumericalError("trajectory " + std::to_string(first_error_index) + ": " + first_error);
  }

  // Merge in chunk order; bitwise independent of the execution schedule.
  result.mean_states.resize(n_times);
  for (size_t k = 0; k < n_times; ++k) {
    Matrix total = result.chunk_sums[0][k];
    for (int c = 1; c < n_chunks; ++c) total += result.chunk_sums[static_cast<size_t>(c)][k];
    result.mean_states[k] = total / static_cast<double>(n);
  }
  if (observable) {
    result.observable_mean.resize(n_times);
    result.observable_sem.resize(n_times);
    for (size_t k = 0; k < n_times; ++k) {
      double s = 0.0, sq = 0.0;
      for (int c = 0; c < n_chunks; ++c) {
        s += chunk_obs_sum[static_cast<size_t>(c)][k];
        sq += chunk_obs_sq[static_cast<size_t>(c)][k];
      }
      const double mean = s / n;
      result.observable_mean[k] = mean;
      if (n > 1) {
        const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1));
        result.observable_sem[k] = std::sqrt(var / n);
      } else {
        result.observable_sem[k] = 0.0;
      }
    }
  }
  return result;
}

double jackknife_sem(const EnsembleResult& ensemble, int checkpoint,
                     const std::function<double(const Matrix&)>& functional) {
  const auto n_chunks = ensemble.chunk_sums.size();
  const auto k = static_cast<size_t>(checkpoint);
  if (n_chunks < 2) return 0.0;
  Matrix total = ensemble.chunk_sums[0][k];
  for (size_t c = 1; c < n_chunks; ++c) total += ensemble.chunk_sums[c][k];
  std::vector<double> leave_out(n_chunks);
  for (size_t c = 0; c < n_chunks; ++c) {
    const int count = ensemble.trajectories - ensemble.chunk_counts[c];
    leave_out[c] = functional((total - ensemble.chunk_sums[c][k]) / count);
  }
  double mean = 0.0;
  for (double v : leave_out) mean += v;
  mean /= static_cast<double>(n_chunks);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean) * (v - mean);
  const double m = static_cast<double>(n_chunks);
  return std::sqrt((m - 1.0) / m * ss);
}

// --- Trajectory factories -------------------------------------------------------

namespace {
struct StepPlan {
  long steps = 1;
  double dt = 0.0;
  std::vector<long> record_at;  // step index per checkpoint
};

StepPlan make_plan(double t, double dt, int checkpoints) {
  if (!(t > 0.0)) throw ConfigError("trajectory horizon must be positive");
  if (!(dt > 0.0)) throw ConfigError("step size must be positive");
  StepPlan plan;
  plan.steps = std::max<long>(1, std::lround(t / dt));
  plan.dt = t / static_cast<double>(plan.steps);
  plan.record_at.resize(static_cast<size_t>(checkpoints) + 1);
  for (int c = 0; c <= checkpoints; ++c) {
    plan.record_at[static_cast<size_t>(c)] =
        std::lround(static_cast<double>(c) * static_cast<double>(plan.steps) / checkpoints);
  }
  return plan;
}

void check_state_positivity(const Matrix& rho, long step, double dt) {
  const double lo = min_eigenvalue(rho);
  if (lo < kTrajectoryPositivityFloor) {
    throw NumericalError("state positivity violated at step " + std::to_string(step) +
                         " (min eigenvalue " + std::to_string(lo) +
                         "); reduce the step size dt = " + std::to_string(dt));
  }
}
}  // namespace

TrajectoryFn sme_trajectory(const SmeContext& cx, Matrix rho0, double t,
                            const SchemeConfig& config, int checkpoints) {
  const StepPlan plan = make_plan(t, config.dt, checkpoints);
  return [cx, rho0 = std::move(rho0), plan, config](uint64_t seed) {
    Rng rng(seed);
    Matrix rho = rho0;
    std::vector<Matrix> states;
    states.reserve(plan.record_at.size());
    size_t next_record = 0;
    for (long step = 0; step <= plan.steps; ++step) {
      if (next_record < plan.record_at.size() && plan.record_at[next_record] == step) {
        check_state_positivity(rho, step, plan.dt);
        states.push_back(rho);
        ++next_record;
      }
      if (step == plan.steps) break;
      rho = sme_step(rho, cx, plan.dt, rng, nullptr, config.renormalize, nullptr);
    }
    return states;
  };
}

TrajectoryFn feedback_trajectory(const FeedbackContext& cx, Matrix rho0, double t,
                                 const SchemeConfig& config, int checkpoints) {
  const StepPlan plan = make_plan(t, config.dt, checkpoints);
  return [cx, rho0 = std::move(rho0), plan, config](uint64_t seed) {
    Rng rng(seed);
    Matrix rho = rho0;
    std::vector<Matrix> states;
    states.reserve(plan.record_at.size());
    size_t next_record = 0;
    for (long step = 0; step <= plan.steps; ++step) {
      if (next_record < plan.record_at.size() && plan.record_at[next_record] == step) {
        check_state_positivity(rho, step, plan.dt);
        states.push_back(rho);
        ++next_record;
      }
      if (step == plan.steps) break;
      rho = feedback_trajectory_step(rho, cx, plan.dt, rng, config.renormalize, nullptr);
    }
    return states;
  };
}

TrajectoryFn sse_trajectory(const SseContext& cx, Vector psi0, double t,
                            const SchemeConfig& config, int checkpoints) {
  const StepPlan plan = make_plan(t, config.dt, checkpoints);
  return [cx, psi0 = std::move(psi0), plan, config](uint64_t seed) {
    Rng rng(seed);
    Vector psi = psi0;
    std::vector<Matrix> states;
    states.reserve(plan.record_at.size());
    size_t next_record = 0;
    double drift_total = 0.0;
    for (long step = 0; step <= plan.steps; ++step) {
      if (next_record < plan.record_at.size() && plan.record_at[next_record] == step) {
        if (step > 0) {
          const double rate = drift_total / (static_cast<double>(step) * plan.dt);
          if (rate > kNormDriftPerUnitTime) {
            throw NumericalError("SSE norm drift " + std::to_string(rate) +
                                 " per unit time; reduce the step size dt = " +
                                 std::to_string(plan.dt));
          }
        }
        states.push_back(psi * psi.adjoint());
        ++next_record;
      }
      if (step == plan.steps) break;
      double drift = 0.0;
      psi = sse_stratonovich_step(psi, cx, plan.dt, rng, config.renormalize, &drift);
      drift_total += drift;
    }
    return states;
  };
}

std::vector<Matrix> run_sme_trajectory_recorded(const SmeContext& cx, const Matrix& rho0,
                                                double t, const SchemeConfig& config,
                                                int checkpoints, uint64_t seed,
                                                SignalRecord* record) {
  const StepPlan plan = make_plan(t, config.dt, checkpoints);
  Rng rng(seed);
  Matrix rho = rho0;
  std::vector<Matrix> states;
  size_t next_record = 0;
  if (record) {
    record->times.clear();
    record->values.clear();
  }
  for (long step = 0; step <= plan.steps; ++step) {
    if (next_record < plan.record_at.size() && plan.record_at[next_record] == step) {
      states.push_back(rho);
      ++next_record;
    }
    if (step == plan.steps) break;
    std::vector<double> signals;
    rho = sme_step(rho, cx, plan.dt, rng, &signals, config.renormalize, nullptr);
    if (record) {
      record->times.push_back(step * plan.dt);
      record->values.push_back(std::move(signals));
    }
  }
  return states;
}

}  // namespace locc
