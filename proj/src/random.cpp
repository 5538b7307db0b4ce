#include "locc/random.hpp"

#include <cmath>

namespace locc {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

uint64_t splitmix64(uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t trajectory_seed(uint64_t base_seed, uint64_t index) {
  return splitmix64(base_seed + (index + 1) * kGolden);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  have_spare_ = true;
  spare_ = r * std::sin(kTwoPi * u2);
  return r * std::cos(kTwoPi * u2);
}

Matrix random_hermitian(int dim, Rng& rng) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(rng.gaussian(), rng.gaussian());
  }
  return (m + m.adjoint()).eval() / 2.0;
}

RealMatrix random_positive_definite(int dim, Rng& rng) {
  RealMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = rng.gaussian();
  }
  return m * m.transpose() + 0.1 * RealMatrix::Identity(dim, dim);
}

Vector random_state_vector(int dim, Rng& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
  return v / v.norm();
}

Matrix random_density_matrix(int dim, Rng& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.gaussian(), rng.gaussian());
  }
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Matrix random_product_state(const BipartiteSpace& space, Rng& rng) {
  const Vector a = random_state_vector(space.dim_a, rng);
  const Vector b = random_state_vector(space.dim_b, rng);
  const Matrix rho_a = a * a.adjoint();
  const Matrix rho_b = b * b.adjoint();
  return tensor(rho_a, rho_b);
}

}  // namespace locc
