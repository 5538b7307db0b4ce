#pragma once

#include <vector>

#include "locc/operators.hpp"
#include "locc/potential.hpp"

namespace locc {

// Continuous-monitoring setup: the monitored observables (already lifted to
// the full space) and the symmetric positive-semidefinite precision matrix.
struct MonitoringSpec {
  std::vector<Matrix> observables;
  RealMatrix gamma;
};

// Throws unless gamma is symmetric (1e-12) with eigenvalues >= -1e-10; when
// require_invertible is set, eigenvalues must be >= 1e-10.
void validate_monitoring_spec(const MonitoringSpec& spec, bool require_invertible);

// Inverse of a symmetric positive-definite matrix via eigendecomposition.
RealMatrix pd_inverse(const RealMatrix& m);

// Linear superoperator acting on column-vectorized states.
//
// Vectorization convention (shared with the stochastic engine): vec stacks
// columns, so vec(A rho B) = (B^T (x) A) vec(rho) and
//   -i[H, .]  ->  -i (I (x) H  -  H^T (x) I).
struct Generator {
  Matrix matrix;  // d^2 x d^2
  int dim = 0;    // d
};

Vector vectorize(const Matrix& rho);
Matrix unvectorize(const Vector& v, int dim);

// Applies the generator to a d x d state.
Matrix apply_generator(const Generator& g, const Matrix& rho);

// Superoperator building blocks.
Matrix left_mult_superop(const Matrix& a);    // rho -> a rho
Matrix right_mult_superop(const Matrix& a);   // rho -> rho a
Matrix commutator_superop(const Matrix& h);   // rho -> [h, rho]
Matrix anticommutator_superop(const Matrix& a);
Matrix double_commutator_superop(const Matrix& x, const Matrix& y);  // rho -> [x,[y,rho]]
Matrix feedback_cross_superop(const Matrix& b, const Matrix& a);     // rho -> i[b, {a, rho}]

// d rho/dt = -i[H, rho] - (1/8) sum_{nm} gamma_nm [A_n, [A_m, rho]].
Generator local_monitoring_generator(const Matrix& hamiltonian, const MonitoringSpec& spec);

// One-way monitoring-plus-feedback master equation:
// d rho/dt = -i[H, rho] - (1/2) sum_n i[B_n, {A_n, rho}]
//            - (1/8) sum_{nm} gammaA_nm [A_n, [A_m, rho]]
//            - (1/2) sum_{nm} (gammaA^-1)_nm [B_n, [B_m, rho]].
Generator oneway_feedback_generator(const Matrix& hamiltonian,
                                    const std::vector<Matrix>& a_list,
                                    const std::vector<Matrix>& b_list,
                                    const RealMatrix& gamma_a);

// Symmetric two-way case:
// d rho/dt = -i[H + sum_n A_n B_n, rho]
//            - sum_{nm} (gammaA_nm/8 + (gammaB^-1)_nm/2) [A_n, [A_m, rho]]
//            - sum_{nm} (gammaB_nm/8 + (gammaA^-1)_nm/2) [B_n, [B_m, rho]].
Generator symmetric_feedback_generator(const Matrix& hamiltonian,
                                       const std::vector<Matrix>& a_list,
                                       const std::vector<Matrix>& b_list,
                                       const RealMatrix& gamma_a,
                                       const RealMatrix& gamma_b);

// Pieces of the symmetric generator, for dissipator-scaling sweeps.
struct SymmetricFeedbackParts {
  Matrix hamiltonian_superop;   // includes the induced non-local term
  Matrix dissipator_a;
  Matrix dissipator_b;
  int dim = 0;
};
SymmetricFeedbackParts symmetric_feedback_parts(const Matrix& hamiltonian,
                                                const std::vector<Matrix>& a_list,
                                                const std::vector<Matrix>& b_list,
                                                const RealMatrix& gamma_a,
                                                const RealMatrix& gamma_b);

// Specialization to a decomposed pair potential on the bipartite lattice
// space: observables are the lifted cos/sin families, the rate matrix is
// diagonal with the per-mode gamma. gamma_by_mode is indexed by mode m.
Generator pair_potential_generator(const Matrix& h_a, const Matrix& h_b,
                                   const std::vector<LocalOperatorPair>& decomposition,
                                   const std::vector<double>& gamma_by_mode);
Generator pair_potential_generator(const Matrix& h_a, const Matrix& h_b,
                                   const std::vector<LocalOperatorPair>& decomposition,
                                   double gamma_uniform = 2.0);

struct PropagationStats {
  double trace_drift = 0.0;  // |Tr - 1| before any renormalization
  double herm_drift = 0.0;   // max |rho - rho^dag| before re-Hermitization
  bool corrected = false;
  double min_eigenvalue = 0.0;
};

// Classical fixed-step RK4 on the vectorized state. The output is
// re-Hermitized and trace-renormalized when the drift exceeds 1e-12 (the
// drift is recorded either way); a final eigenvalue below -1e-6 raises
// NumericalError with a step-size hint.
Matrix propagate(const Generator& g, const Matrix& rho0, double t, int steps,
                 PropagationStats* stats = nullptr);

// Superoperator matrix exponential; exact up to expm accuracy. Guarded to
// d^2 <= 1024.
Matrix propagate_exact(const Generator& g, const Matrix& rho0, double t);

struct GklsReport {
  bool pass = false;
  double min_conditional_eigenvalue = 0.0;  // of the Choi matrix projected
                                            // off the maximally-mixed direction
  double trace_preservation_error = 0.0;
  double hermiticity_preservation_error = 0.0;
  Matrix hamiltonian_part;                  // traceless effective Hamiltonian
};

// Structural GKLS test: splits the generator into Hamiltonian and dissipative
// parts and checks conditional complete positivity of the dissipative part
// (the Hamiltonian part drops out of the projected Choi matrix identically).
GklsReport gkls_validity_check(const Generator& g);

}  // namespace locc
