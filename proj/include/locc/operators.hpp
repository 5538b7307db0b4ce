#pragma once

#include <Eigen/Dense>
#include <complex>

#include "locc/errors.hpp"

namespace locc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Numerical tolerances used by the state invariants.
inline constexpr double kHermTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPositivityFloor = -1e-8;

enum class Side { A, B };

// Bipartite splitting of a finite-dimensional Hilbert space.
//
// Index convention (used everywhere in this library): the joint space is
// A-major, i.e. the row index of an operator on A(x)B is
//   row = i_A * dim_b + i_B.
struct BipartiteSpace {
  int dim_a = 1;
  int dim_b = 1;

  int total() const { return dim_a * dim_b; }
};

BipartiteSpace make_bipartite_space(int dim_a, int dim_b);

// Hermitian, unit-trace, positive-semidefinite operator on a bipartite space.
struct DensityMatrix {
  Matrix rho;
  BipartiteSpace space;
};

struct StateDiagnostics {
  double trace_error = 0.0;    // |Tr rho - 1|
  double herm_error = 0.0;     // max |rho - rho^dag|
  double min_eigenvalue = 0.0;
};

StateDiagnostics state_diagnostics(const Matrix& rho);

// Validates the DensityMatrix invariants; throws NumericalError on violation.
DensityMatrix make_density_matrix(Matrix rho, BipartiteSpace space);

double hermiticity_error(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = kHermTol);

// Smallest eigenvalue of a (nearly) Hermitian matrix.
double min_eigenvalue(const Matrix& m);

// Kronecker product, A-major: out(i_a*db + i_b, j_a*db + j_b) = a(i_a,j_a)*b(i_b,j_b).
Matrix tensor(const Matrix& a, const Matrix& b);

// Embeds a single-subsystem operator into the full space (op(x)I or I(x)op).
Matrix lift(const Matrix& op, Side side, const BipartiteSpace& space);

// Reduced operator on the kept factor; preserves the trace.
Matrix partial_trace(const Matrix& rho, const BipartiteSpace& space, Side keep);

// Transpose of the B factor only. PT of a Hermitian matrix is Hermitian.
Matrix partial_transpose(const Matrix& rho, const BipartiteSpace& space);

// Entanglement negativity N = (||rho^T_B||_1 - 1)/2, clamped at 0.
// The trace norm is computed from the Hermitian eigendecomposition of the PT.
double negativity(const Matrix& rho, const BipartiteSpace& space);

// (1/2) ||a - b||_1 for Hermitian a, b.
double trace_distance(const Matrix& a, const Matrix& b);

Matrix commutator(const Matrix& a, const Matrix& b);      // [a, b]
Matrix anticommutator(const Matrix& a, const Matrix& b);  // {a, b}
Matrix double_commutator(const Matrix& a, const Matrix& b, const Matrix& rho);  // [a,[b,rho]]

Matrix identity(int dim);
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();

}  // namespace locc
