#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "locc/gkls.hpp"
#include "locc/operators.hpp"
#include "locc/random.hpp"

namespace locc {

// Correlated Gaussian noise source. `factor` is a lower-triangular matrix
// with factor * factor^T = covariance; positive-semidefinite covariances are
// allowed (zero pivots produce zero columns).
struct NoiseModel {
  RealMatrix covariance;
  RealMatrix factor;
};

RealMatrix psd_cholesky(const RealMatrix& m);
NoiseModel make_noise_model(RealMatrix covariance);

// Circulant matrix with first row r: C(i, j) = r[(i - j) mod n].
RealMatrix circulant(const std::vector<double>& first_row);

// White-noise value over one step of length dt: w ~ N(0, covariance / dt),
// i.e. the increments w * dt have covariance `covariance * dt`.
RealVector sample_noise_increments(const NoiseModel& model, double dt, Rng& rng);

enum class Scheme { ItoEuler, StratonovichHeun };

struct SchemeConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::ItoEuler;
  bool renormalize = true;  // per-step trace/norm renormalization
};

// Per-step monitoring signals a_n(t) = <A_n> + w_n(t).
struct SignalRecord {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [step][observable]
};

// --- Stochastic master equation (Ito) -------------------------------------

struct SmeContext {
  std::vector<Matrix> observables;
  RealMatrix gamma;
  Generator deterministic;  // the noise-averaged generator
  NoiseModel noise;         // signal noise, covariance = gamma^-1
};

// gamma must be strictly positive-definite (the signal covariance is its
// inverse).
SmeContext make_sme_context(const Matrix& hamiltonian, const MonitoringSpec& spec);

// One Euler-Maruyama step. The output is re-Hermitized; the trace is
// renormalized when `renormalize` is set and the drift reported via
// `trace_drift`.
Matrix sme_step(const Matrix& rho, const SmeContext& cx, double dt, Rng& rng,
                std::vector<double>* signals = nullptr, bool renormalize = true,
                double* trace_drift = nullptr);

// --- Measurement-plus-feedback trajectories --------------------------------

struct FeedbackContext {
  SmeContext sme;
  std::vector<Matrix> feedback_ops;  // operator j is driven by signal j

  // fast paths for the feedback unitary
  bool all_diagonal = false;
  bool single_cached = false;
  Matrix cached_evecs;
  RealVector cached_evals;

  Generator averaged;  // the matching deterministic feedback generator
};

// Alice monitors a_list (precision gamma_a), Bob applies the signals through
// b_list. The ensemble mean converges to oneway_feedback_generator dynamics.
FeedbackContext make_oneway_feedback_context(const Matrix& hamiltonian,
                                             const std::vector<Matrix>& a_list,
                                             const std::vector<Matrix>& b_list,
                                             const RealMatrix& gamma_a);

// Both parties monitor and feed back; converges to the symmetric generator.
FeedbackContext make_symmetric_feedback_context(const Matrix& hamiltonian,
                                                const std::vector<Matrix>& a_list,
                                                const std::vector<Matrix>& b_list,
                                                const RealMatrix& gamma_a,
                                                const RealMatrix& gamma_b);

// One measurement sub-step followed by the feedback unitary
// exp(-i sum_j a_j(t) F_j dt) built from that sub-step's signals.
Matrix feedback_trajectory_step(const Matrix& rho, const FeedbackContext& cx, double dt,
                                Rng& rng, bool renormalize = true,
                                double* trace_drift = nullptr);

// --- Stochastic Schroedinger equation (Stratonovich) -----------------------

struct SseContext {
  Matrix h_total;  // lifted H_A + H_B + V
  NoiseModel noise_a;  // site-noise covariance on Alice's lattice
  NoiseModel noise_b;
  BipartiteSpace space;
};

SseContext make_sse_context(const Matrix& h_total, const RealMatrix& site_cov_a,
                            const RealMatrix& site_cov_b, const BipartiteSpace& space);

// One Heun (predictor-corrector) step of
//   d psi/dt = -i (H + xi_A(x_A) + xi_B(x_B)) psi
// with the noise held fixed within the step (Stratonovich limit).
Vector sse_stratonovich_step(const Vector& psi, const SseContext& cx, double dt, Rng& rng,
                             bool renormalize = true, double* norm_drift = nullptr);

// --- Ensembles --------------------------------------------------------------

// Evenly spaced checkpoint times 0, t/checkpoints, ..., t.
std::vector<double> checkpoint_times(double t, int checkpoints);

// A trajectory maps its seed to the states at the checkpoint times.
using TrajectoryFn = std::function<std::vector<Matrix>(uint64_t seed)>;

struct EnsembleSpec {
  int trajectories = 1;
  uint64_t base_seed = 0;
  int threads = 1;
  std::vector<double> times;
};

struct EnsembleResult {
  int trajectories = 0;
  uint64_t base_seed = 0;
  std::vector<double> times;
  std::vector<Matrix> mean_states;  // per checkpoint

  // per-chunk partial sums, kept for jackknife error estimates
  std::vector<std::vector<Matrix>> chunk_sums;  // [chunk][checkpoint]
  std::vector<int> chunk_counts;

  // designated-observable statistics per checkpoint (when an observable is given)
  std::vector<double> observable_mean;
  std::vector<double> observable_sem;

  const Matrix& mean_state() const { return mean_states.back(); }
};

// Runs `spec.trajectories` independent trajectories with seeds derived from
// (base_seed, index) and merges them through fixed-size chunks in index
// order: the result is bit-identical for any thread count. Step errors are
// rethrown with the trajectory index attached.
EnsembleResult run_ensemble(const TrajectoryFn& trajectory, const EnsembleSpec& spec,
                            const Matrix* observable = nullptr);

// Delete-one-chunk jackknife standard error of a scalar functional of the
// ensemble mean state at one checkpoint.
double jackknife_sem(const EnsembleResult& ensemble, int checkpoint,
                     const std::function<double(const Matrix&)>& functional);

// --- Trajectory factories ---------------------------------------------------

// States are recorded at the checkpoint times; positivity is validated at
// each checkpoint (floor -1e-4); the step count is round(t / dt).
TrajectoryFn sme_trajectory(const SmeContext& cx, Matrix rho0, double t,
                            const SchemeConfig& config, int checkpoints);
TrajectoryFn feedback_trajectory(const FeedbackContext& cx, Matrix rho0, double t,
                                 const SchemeConfig& config, int checkpoints);
// Records |psi><psi| at the checkpoints; norm drift beyond 1e-3 per unit time
// raises NumericalError.
TrajectoryFn sse_trajectory(const SseContext& cx, Vector psi0, double t,
                            const SchemeConfig& config, int checkpoints);

// Single SME run that also returns the monitoring signals (for statistics
// tests and diagnostics).
std::vector<Matrix> run_sme_trajectory_recorded(const SmeContext& cx, const Matrix& rho0,
                                                double t, const SchemeConfig& config,
                                                int checkpoints, uint64_t seed,
                                                SignalRecord* record);

}  // namespace locc
