#pragma once

#include <cstdint>
#include <random>

#include "locc/operators.hpp"

namespace locc {

// Stateless 64-bit mixing function (splitmix64 finalizer).
uint64_t splitmix64(uint64_t x);

// Trajectory i draws from an independent stream seeded with
// splitmix64(base_seed + (i + 1) * 0x9E3779B97F4A7C15). This derivation is
// part of the output contract: results depend on (base_seed, i) only.
uint64_t trajectory_seed(uint64_t base_seed, uint64_t index);

// Deterministic random stream: std::mt19937_64 bits turned into doubles in
// [0, 1) and Box-Muller normals. No library distributions are used, so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform();   // [0, 1)
  double gaussian();  // N(0, 1)

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Test/scenario state factories; all draws consume the given stream only.
Matrix random_hermitian(int dim, Rng& rng);
RealMatrix random_positive_definite(int dim, Rng& rng);
Vector random_state_vector(int dim, Rng& rng);
Matrix random_density_matrix(int dim, Rng& rng);  // Ginibre construction
Matrix random_product_state(const BipartiteSpace& space, Rng& rng);  // pure x pure

}  // namespace locc
