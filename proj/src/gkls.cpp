#include "locc/gkls.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

namespace locc {

namespace {
constexpr double kGammaSymTol = 1e-12;
constexpr double kGammaPsdFloor = -1e-10;
constexpr double kGammaInvertibleFloor = 1e-10;
constexpr double kDriftThreshold = 1e-12;
constexpr double kPropagatePositivityFloor = -1e-6;

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(who) + ": operator must be square");
}

void require_hermitian(const Matrix& m, const char* who) {
  require_square(m, who);
  if (!is_hermitian(m)) {
    throw NumericalError(std::string(who) + ": operator not Hermitian, error " +
                         std::to_string(hermiticity_error(m)));
  }
}
}  // namespace

void validate_monitoring_spec(const MonitoringSpec& spec, bool require_invertible) {
  const auto n = static_cast<Eigen::Index>(spec.observables.size());
  if (spec.gamma.rows() != n || spec.gamma.cols() != n) {
    throw DimensionError("gamma matrix size does not match the observable count");
  }
  if (n == 0) return;
  const Eigen::Index d = spec.observables.front().rows();
  for (const auto& obs : spec.observables) {
    require_hermitian(obs, "monitored observable");
    if (obs.rows() != d) throw DimensionError("monitored observables have mixed dimensions");
  }
  if ((spec.gamma - spec.gamma.transpose()).cwiseAbs().maxCoeff() > kGammaSymTol) {
    throw NumericalError("gamma matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(spec.gamma, Eigen::EigenvaluesOnly);
  const double lo = solver.eigenvalues().minCoeff();
  if (require_invertible) {
    if (lo < kGammaInvertibleFloor) {
      throw NumericalError("gamma matrix must be strictly positive-definite, min eigenvalue " +
                           std::to_string(lo));
    }
  } else if (lo < kGammaPsdFloor) {
    throw NumericalError("gamma matrix not positive-semidefinite, min eigenvalue " +
                         std::to_string(lo));
  }
}

RealMatrix pd_inverse(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (solver.eigenvalues().minCoeff() < kGammaInvertibleFloor) {
    throw NumericalError("matrix not invertible within tolerance");
  }
  return solver.eigenvectors() * solver.eigenvalues().cwiseInverse().asDiagonal() *
         solver.eigenvectors().transpose();
}

Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvectorize(const Vector& v, int dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Matrix apply_generator(const Generator& g, const Matrix& rho) {
  return unvectorize(g.matrix * vectorize(rho), g.dim);
}

Matrix left_mult_superop(const Matrix& a) {
  return tensor(Matrix::Identity(a.rows(), a.rows()), a);
}

Matrix right_mult_superop(const Matrix& a) {
  return tensor(a.transpose(), Matrix::Identity(a.rows(), a.rows()));
}

Matrix commutator_superop(const Matrix& h) {
  return left_mult_superop(h) - right_mult_superop(h);
}

Matrix anticommutator_superop(const Matrix& a) {
  return left_mult_superop(a) + right_mult_superop(a);
}

Matrix double_commutator_superop(const Matrix& x, const Matrix& y) {
  return commutator_superop(x) * commutator_superop(y);
}

Matrix feedback_cross_superop(const Matrix& b, const Matrix& a) {
  return Complex(0, 1) * commutator_superop(b) * anticommutator_superop(a);
}

namespace {
// - sum_{nm} coeff_nm [X_n, [X_m, .]]
Matrix weighted_double_commutators(const std::vector<Matrix>& ops, const RealMatrix& coeff,
                                   int d2) {
  Matrix out = Matrix::Zero(d2, d2);
  std::vector<Matrix> commutators;
  commutators.reserve(ops.size());
  for (const auto& op : ops) commutators.push_back(commutator_superop(op));
  for (size_t n = 0; n < ops.size(); ++n) {
    for (size_t m = 0; m < ops.size(); ++m) {
      const double c = coeff(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      if (c == 0.0) continue;
      out -= c * commutators[n] * commutators[m];
    }
  }
  return out;
}
}  // namespace

Generator local_monitoring_generator(const Matrix& hamiltonian, const MonitoringSpec& spec) {
  require_hermitian(hamiltonian, "Hamiltonian");
  validate_monitoring_spec(spec, /*require_invertible=*/false);
  const int d = static_cast<int>(hamiltonian.rows());
  Matrix g = Complex(0, -1) * commutator_superop(hamiltonian);
  g += weighted_double_commutators(spec.observables, spec.gamma / 8.0, d * d);
  return Generator{std::move(g), d};
}

Generator oneway_feedback_generator(const Matrix& hamiltonian,
                                    const std::vector<Matrix>& a_list,
                                    const std::vector<Matrix>& b_list,
                                    const RealMatrix& gamma_a) {
  require_hermitian(hamiltonian, "Hamiltonian");
  if (a_list.size() != b_list.size()) {
    throw DimensionError("monitored and feedback operator lists differ in length");
  }
  validate_monitoring_spec(MonitoringSpec{a_list, gamma_a}, /*require_invertible=*/true);
  for (const auto& b : b_list) require_hermitian(b, "feedback operator");
  const int d = static_cast<int>(hamiltonian.rows());
  if (a_list.empty()) {
    return Generator{Complex(0, -1) * commutator_superop(hamiltonian), d};
  }
  const RealMatrix gamma_a_inv = pd_inverse(gamma_a);

  Matrix g = Complex(0, -1) * commutator_superop(hamiltonian);
  for (size_t n = 0; n < a_list.size(); ++n) {
    g -= 0.5 * feedback_cross_superop(b_list[n], a_list[n]);
  }
  g += weighted_double_commutators(a_list, gamma_a / 8.0, d * d);
  g += weighted_double_commutators(b_list, gamma_a_inv / 2.0, d * d);
  return Generator{std::move(g), d};
}

SymmetricFeedbackParts symmetric_feedback_parts(const Matrix& hamiltonian,
                                                const std::vector<Matrix>& a_list,
                                                const std::vector<Matrix>& b_list,
                                                const RealMatrix& gamma_a,
                                                const RealMatrix& gamma_b) {
  require_hermitian(hamiltonian, "Hamiltonian");
  if (a_list.size() != b_list.size()) {
    throw DimensionError("observable lists differ in length");
  }
  validate_monitoring_spec(MonitoringSpec{a_list, gamma_a}, /*require_invertible=*/true);
  validate_monitoring_spec(MonitoringSpec{b_list, gamma_b}, /*require_invertible=*/true);
  const int d = static_cast<int>(hamiltonian.rows());

  Matrix h_total = hamiltonian;
  for (size_t n = 0; n < a_list.size(); ++n) h_total += a_list[n] * b_list[n];

  SymmetricFeedbackParts parts;
  parts.dim = d;
  parts.hamiltonian_superop = Complex(0, -1) * commutator_superop(h_total);
  if (a_list.empty()) {
    parts.dissipator_a = Matrix::Zero(d * d, d * d);
    parts.dissipator_b = Matrix::Zero(d * d, d * d);
    return parts;
  }
  const RealMatrix gamma_a_inv = pd_inverse(gamma_a);
  const RealMatrix gamma_b_inv = pd_inverse(gamma_b);
  parts.dissipator_a =
      weighted_double_commutators(a_list, gamma_a / 8.0 + gamma_b_inv / 2.0, d * d);
  parts.dissipator_b =
      weighted_double_commutators(b_list, gamma_b / 8.0 + gamma_a_inv / 2.0, d * d);
  return parts;
}

Generator symmetric_feedback_generator(const Matrix& hamiltonian,
                                       const std::vector<Matrix>& a_list,
                                       const std::vector<Matrix>& b_list,
                                       const RealMatrix& gamma_a,
                                       const RealMatrix& gamma_b) {
  SymmetricFeedbackParts parts =
      symmetric_feedback_parts(hamiltonian, a_list, b_list, gamma_a, gamma_b);
  return Generator{parts.hamiltonian_superop + parts.dissipator_a + parts.dissipator_b,
                   parts.dim};
}

namespace {
Generator pair_potential_generator_impl(const Matrix& h_a, const Matrix& h_b,
                                        const std::vector<LocalOperatorPair>& decomposition,
                                        const std::vector<double>& gamma_by_mode) {
  require_hermitian(h_a, "local Hamiltonian");
  require_hermitian(h_b, "local Hamiltonian");
  const BipartiteSpace space{static_cast<int>(h_a.rows()), static_cast<int>(h_b.rows())};
  std::vector<Matrix> a_list, b_list;
  RealMatrix gamma = RealMatrix::Zero(static_cast<Eigen::Index>(decomposition.size()),
                                      static_cast<Eigen::Index>(decomposition.size()));
  for (size_t i = 0; i < decomposition.size(); ++i) {
    const auto& pair = decomposition[i];
    if (pair.mode < 0 || pair.mode >= static_cast<int>(gamma_by_mode.size())) {
      throw DimensionError("no monitoring rate supplied for mode " + std::to_string(pair.mode));
    }
    const double g = gamma_by_mode[pair.mode];
    if (!(g > 0.0)) {
      throw ConfigError("per-mode gamma must be positive, got " + std::to_string(g) +
                        " for mode " + std::to_string(pair.mode));
    }
    a_list.push_back(lift(pair.a_op, Side::A, space));
    b_list.push_back(lift(pair.b_op, Side::B, space));
    gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = g;
  }
  const Matrix h_local = lift(h_a, Side::A, space) + lift(h_b, Side::B, space);
  if (a_list.empty()) {
    return Generator{Complex(0, -1) * commutator_superop(h_local), space.total()};
  }
  return symmetric_feedback_generator(h_local, a_list, b_list, gamma, gamma);
}
}  // namespace

Generator pair_potential_generator(const Matrix& h_a, const Matrix& h_b,
                                   const std::vector<LocalOperatorPair>& decomposition,
                                   const std::vector<double>& gamma_by_mode) {
  return pair_potential_generator_impl(h_a, h_b, decomposition, gamma_by_mode);
}

Generator pair_potential_generator(const Matrix& h_a, const Matrix& h_b,
                                   const std::vector<LocalOperatorPair>& decomposition,
                                   double gamma_uniform) {
  int max_mode = -1;
  for (const auto& pair : decomposition) max_mode = std::max(max_mode, pair.mode);
  std::vector<double> gamma_by_mode(static_cast<size_t>(max_mode + 1), gamma_uniform);
  return pair_potential_generator_impl(h_a, h_b, decomposition, gamma_by_mode);
}

Matrix propagate(const Generator& g, const Matrix& rho0, double t, int steps,
                 PropagationStats* stats) {
  if (t < 0.0) throw ConfigError("propagation time must be nonnegative");
  if (steps < 1) throw ConfigError("propagation needs at least one step");
  if (rho0.rows() != g.dim || rho0.cols() != g.dim) {
    throw DimensionError("state dimension does not match the generator");
  }
  Vector v = vectorize(rho0);
  if (t > 0.0) {
    const double h = t / steps;
    Vector k1(v.size()), k2(v.size()), k3(v.size()), k4(v.size()), tmp(v.size());
    for (int step = 0; step < steps; ++step) {
      k1.noalias() = g.matrix * v;
      tmp.noalias() = v + (h / 2) * k1;
      k2.noalias() = g.matrix * tmp;
      tmp.noalias() = v + (h / 2) * k2;
      k3.noalias() = g.matrix * tmp;
      tmp.noalias() = v + h * k3;
      k4.noalias() = g.matrix * tmp;
      v += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  Matrix rho = unvectorize(v, g.dim);
  if (!rho.allFinite()) {
    throw NumericalError("propagation diverged; reduce the step size t/steps = " +
                         std::to_string(t / steps));
  }

  PropagationStats local;
  local.herm_drift = hermiticity_error(rho);
  local.trace_drift = std::abs(rho.trace() - Complex(1, 0));
  if (local.herm_drift > kDriftThreshold || local.trace_drift > kDriftThreshold) {
    rho = (rho + rho.adjoint()).eval() / 2.0;
    rho /= rho.trace().real();
    local.corrected = true;
  }
  local.min_eigenvalue = min_eigenvalue(rho);
  if (stats) *stats = local;
  if (local.min_eigenvalue < kPropagatePositivityFloor) {
    throw NumericalError("state positivity violated (min eigenvalue " +
                         std::to_string(local.min_eigenvalue) +
                         "); reduce the step size t/steps = " + std::to_string(t / steps));
  }
  return rho;
}

Matrix propagate_exact(const Generator& g, const Matrix& rho0, double t) {
  if (g.matrix.rows() > 1024) {
    throw ConfigError("exact propagation restricted to superoperators of size <= 1024");
  }
  Matrix prop = (g.matrix * t).exp();
  Matrix rho = unvectorize(prop * vectorize(rho0), g.dim);
  rho = (rho + rho.adjoint()).eval() / 2.0;
  return rho;
}

GklsReport gkls_validity_check(const Generator& g) {
  const int d = g.dim;
  const int d2 = d * d;
  GklsReport report;

  // Trace preservation: Tr L(rho) = 0 for all rho, i.e. vec(I)^dag G = 0.
  Vector id_vec = vectorize(Matrix::Identity(d, d));
  report.trace_preservation_error = (id_vec.adjoint() * g.matrix).cwiseAbs().maxCoeff();

  // Hermiticity preservation on a deterministic probe basis: matrix units
  // combined into Hermitian probes.
  double herm_err = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Matrix probe = Matrix::Zero(d, d);
      probe(i, j) += Complex(0.5, 0);
      probe(j, i) += Complex(0.5, 0);
      Matrix mapped = apply_generator(g, probe);
      herm_err = std::max(herm_err, hermiticity_error(mapped));
      if (i != j) {
        probe(i, j) = Complex(0, 0.5);
        probe(j, i) = Complex(0, -0.5);
        mapped = apply_generator(g, probe);
        herm_err = std::max(herm_err, hermiticity_error(mapped));
      }
    }
  }
  report.hermiticity_preservation_error = herm_err;

  // Choi matrix C[(i,k),(j,l)] = L(|i><j|)_{kl}.
  Matrix choi(d2, d2);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Vector col = g.matrix.col(j * d + i);
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          choi(i * d + k, j * d + l) = col(l * d + k);
        }
      }
    }
  }
  choi = (choi + choi.adjoint()).eval() / 2.0;

  // Effective Hamiltonian from the diagonal-block sum of the superoperator:
  // W = sum_J G[J d + r, J d + c] satisfies (W - W^dag) / (2 i d) = -H up to
  // a multiple of the identity.
  Matrix w = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) w += g.matrix.block(j * d, j * d, d, d);
  Matrix h = Complex(0, 1) * (w - w.adjoint()) / (2.0 * d);
  h -= (h.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
  report.hamiltonian_part = h;

  // Conditional complete positivity: project the Choi matrix off the
  // maximally-entangled direction. The Hamiltonian part of any generator is
  // annihilated by this projection, so what remains is the dissipative part.
  Vector omega = Vector::Zero(d2);
  for (int i = 0; i < d; ++i) omega(i * d + i) = Complex(1.0 / std::sqrt(double(d)), 0);
  Matrix proj = Matrix::Identity(d2, d2) - omega * omega.adjoint();
  Matrix conditional = proj * choi * proj;
  conditional = (conditional + conditional.adjoint()).eval() / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(conditional, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in gkls_validity_check");
  }
  report.min_conditional_eigenvalue = solver.eigenvalues().minCoeff();

  report.pass = report.min_conditional_eigenvalue >= -1e-8 &&
                report.trace_preservation_error <= 1e-10 &&
                report.hermiticity_preservation_error <= 1e-10;
  return report;
}

}  // namespace locc
