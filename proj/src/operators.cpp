#include "locc/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace locc {

BipartiteSpace make_bipartite_space(int dim_a, int dim_b) {
  if (dim_a < 1 || dim_b < 1) {
    throw DimensionError("bipartite space dimensions must be >= 1, got (" +
                         std::to_string(dim_a) + ", " + std::to_string(dim_b) + ")");
  }
  return BipartiteSpace{dim_a, dim_b};
}

double hermiticity_error(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && hermiticity_error(m) <= tol;
}

double min_eigenvalue(const Matrix& m) {
  Matrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in min_eigenvalue");
  }
  return solver.eigenvalues().minCoeff();
}

StateDiagnostics state_diagnostics(const Matrix& rho) {
  StateDiagnostics d;
  d.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  d.herm_error = hermiticity_error(rho);
  d.min_eigenvalue = min_eigenvalue(rho);
  return d;
}

DensityMatrix make_density_matrix(Matrix rho, BipartiteSpace space) {
  if (rho.rows() != rho.cols() || rho.rows() != space.total()) {
    throw DimensionError("density matrix dimension " + std::to_string(rho.rows()) +
                         " does not match space dimension " + std::to_string(space.total()));
  }
  StateDiagnostics d = state_diagnostics(rho);
  if (d.trace_error > kTraceTol) {
    throw NumericalError("density matrix trace off by " + std::to_string(d.trace_error));
  }
  if (d.herm_error > kHermTol) {
    throw NumericalError("density matrix not Hermitian, error " + std::to_string(d.herm_error));
  }
  if (d.min_eigenvalue < kPositivityFloor) {
    throw NumericalError("density matrix not positive, min eigenvalue " +
                         std::to_string(d.min_eigenvalue));
  }
  return DensityMatrix{std::move(rho), space};
}

Matrix tensor(const Matrix& a, const Matrix& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols();
  const Eigen::Index rb = b.rows(), cb = b.cols();
  Matrix out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i) {
    for (Eigen::Index j = 0; j < ca; ++j) {
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    }
  }
  return out;
}

Matrix lift(const Matrix& op, Side side, const BipartiteSpace& space) {
  const int d = side == Side::A ? space.dim_a : space.dim_b;
  if (op.rows() != d || op.cols() != d) {
    throw DimensionError("lift: operator dimension " + std::to_string(op.rows()) +
                         " does not match subsystem dimension " + std::to_string(d));
  }
  if (side == Side::A) {
    return tensor(op, Matrix::Identity(space.dim_b, space.dim_b));
  }
  return tensor(Matrix::Identity(space.dim_a, space.dim_a), op);
}

Matrix partial_trace(const Matrix& rho, const BipartiteSpace& space, Side keep) {
  const int da = space.dim_a, db = space.dim_b;
  if (rho.rows() != space.total() || rho.cols() != space.total()) {
    throw DimensionError("partial_trace: state does not match the space");
  }
  if (keep == Side::A) {
    Matrix out = Matrix::Zero(da, da);
    for (int i = 0; i < da; ++i)
      for (int k = 0; k < da; ++k)
        for (int j = 0; j < db; ++j) out(i, k) += rho(i * db + j, k * db + j);
    return out;
  }
  Matrix out = Matrix::Zero(db, db);
  for (int j = 0; j < db; ++j)
    for (int l = 0; l < db; ++l)
      for (int i = 0; i < da; ++i) out(j, l) += rho(i * db + j, i * db + l);
  return out;
}

Matrix partial_transpose(const Matrix& rho, const BipartiteSpace& space) {
  const int da = space.dim_a, db = space.dim_b;
  if (rho.rows() != space.total() || rho.cols() != space.total()) {
    throw DimensionError("partial_transpose: state does not match the space");
  }
  Matrix out(rho.rows(), rho.cols());
  for (int i = 0; i < da; ++i)
    for (int k = 0; k < da; ++k)
      for (int j = 0; j < db; ++j)
        for (int l = 0; l < db; ++l)
          out(i * db + j, k * db + l) = rho(i * db + l, k * db + j);
  return out;
}

double negativity(const Matrix& rho, const BipartiteSpace& space) {
  Matrix pt = partial_transpose(rho, space);
  pt = (pt + pt.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(pt, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in negativity");
  }
  const double trace_norm = solver.eigenvalues().cwiseAbs().sum();
  return std::max(0.0, (trace_norm - 1.0) / 2.0);
}

double trace_distance(const Matrix& a, const Matrix& b) {
  Matrix diff = a - b;
  diff = (diff + diff.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(diff, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in trace_distance");
  }
  return solver.eigenvalues().cwiseAbs().sum() / 2.0;
}

namespace {
void require_same_dim(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw DimensionError(std::string(who) + ": operator dimensions do not match");
  }
}
}  // namespace

Matrix commutator(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

Matrix anticommutator(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "anticommutator");
  return a * b + b * a;
}

Matrix double_commutator(const Matrix& a, const Matrix& b, const Matrix& rho) {
  require_same_dim(a, b, "double_commutator");
  require_same_dim(a, rho, "double_commutator");
  return commutator(a, commutator(b, rho));
}

Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

Matrix sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix sigma_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

Matrix sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace locc
