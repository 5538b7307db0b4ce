#pragma once

#include <functional>
#include <string>
#include <vector>

#include "locc/operators.hpp"

namespace locc {

// Periodic 1-D lattice carrying the pair potential.
//
// Mode convention (the single source of truth, used by the decomposition and
// by the decoherence kernel alike):
//
//   wavenumbers   k_m = 2*pi*m / (L * spacing),  m = 0 .. floor(L/2)
//   analysis      v_m = (w_m / L) * sum_d V(d) * cos(2*pi*m*d / L)
//   synthesis     V(d) = sum_m v_m * cos(2*pi*m*d / L)
//
// with edge weights w_m = 1 for m = 0 and (L even) m = L/2, and w_m = 2 for
// interior modes. Only even potentials V(d) = V((L-d) mod L) admit this
// cosine-only expansion; odd components are rejected, not symmetrized.
struct Lattice {
  int sites = 2;
  double spacing = 1.0;

  double period() const { return sites * spacing; }
  int mode_count() const { return sites / 2 + 1; }
  double wavenumber(int m) const;
};

Lattice make_lattice(int sites, double spacing);

// Translation-invariant pair potential tabulated over displacements d = 0..L-1.
struct PairPotential {
  std::vector<double> values;
};

// Cosine amplitudes v_m indexed by mode m = 0..floor(L/2).
struct FourierModes {
  std::vector<double> v;
};

// One (k, s) entry of the local-operator expansion of the potential:
//   a_op = sqrt(|v_k|) * cos(k x)  (s = 1)   or   sqrt(|v_k|) * sin(k x)  (s = 2)
//   b_op = sgn(v_k) * a_op pattern on the other side.
// Both are diagonal in the position basis and Hermitian.
struct LocalOperatorPair {
  int mode = 0;       // m
  int s = 1;          // 1 = cos, 2 = sin
  double wavenumber = 0.0;
  double v = 0.0;     // signed mode amplitude
  Matrix a_op;
  Matrix b_op;
};

// Spatial decoherence kernel: the potential rebuilt from |v_m|.
struct DecoherenceKernel {
  std::vector<double> values;  // length L
  double diag = 0.0;           // kernel at zero displacement = sum_m |v_m|
};

// Throws NumericalError if the potential has an odd component.
void check_even(const PairPotential& pot, const Lattice& lat);

FourierModes fourier_modes(const PairPotential& pot, const Lattice& lat);
PairPotential reconstruct_values(const FourierModes& modes, const Lattice& lat);

// Modes with |v_m| < 1e-14 are dropped, as are identically-zero sin factors
// (s = 2 at m = 0 and, for even L, at m = L/2).
std::vector<LocalOperatorPair> build_local_operators(const FourierModes& modes,
                                                     const Lattice& lat);

// sum_{k,s} a_op (x) b_op; diagonal, entry (x_a, x_b) = V((x_a - x_b) mod L).
Matrix reconstruct_potential(const std::vector<LocalOperatorPair>& pairs,
                             const BipartiteSpace& space);

DecoherenceKernel decoherence_kernel(const FourierModes& modes, const Lattice& lat);

// Per-mode decoherence coefficient gamma/8 + 1/(2*gamma); gamma must be > 0.
double decoherence_cost(double gamma);

struct LeastDecoherence {
  double gamma_star = 2.0;     // analytic minimizer
  double cost_star = 0.5;      // analytic minimum
  double gamma_numeric = 0.0;  // golden-section cross-check
  double cost_numeric = 0.0;
};

// Analytic minimizer of decoherence_cost cross-checked by a bracketed
// golden-section search (absolute tolerance 1e-10 on the bracket).
LeastDecoherence least_decoherence_rate();

struct DivergenceScanRow {
  int sites = 0;
  double kernel_diag = 0.0;  // sum_m |v_m| at this resolution
};

// Samples a continuum potential callback at displacements d*spacing on
// lattices of increasing resolution (fixed period) and tabulates the kernel
// diagonal. A non-finite sample at d = 0 is replaced by the value one lattice
// spacing away (short-distance regularization by the lattice itself).
std::vector<DivergenceScanRow> divergence_scan(
    const std::function<double(double)>& potential,
    const std::vector<int>& resolutions, double period);

// Built-in potentials.
PairPotential cosine_potential(const Lattice& lat, int mode = 1, double amplitude = 1.0);
PairPotential delta_potential(const Lattice& lat, double amplitude = 1.0);
PairPotential power_law_potential(const Lattice& lat, double exponent = 1.0);
PairPotential zero_potential(const Lattice& lat);

// Two-column text table: displacement index, value. One row per site.
PairPotential load_potential(const std::string& path, const Lattice& lat);

}  // namespace locc
