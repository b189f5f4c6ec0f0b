#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace fixtures {

using namespace hierctl;

RunConfig small_config(std::size_t n, std::size_t m, const std::string& f) {
  RunConfig cfg;
  cfg.n = n;
  cfg.m = m;
  cfg.f1 = f;
  cfg.f2 = f;
  return cfg;
}

std::unique_ptr<Setup> small_setup(std::size_t n, std::size_t m, const std::string& f) {
  return build_setup(small_config(n, m, f));
}

SpaceTimeField random_field(const Discretization& disc, std::mt19937_64& rng, const Mask* mask) {
  std::normal_distribution<double> normal;
  SpaceTimeField out = disc.field("random");
  for (std::size_t k = 0; k < out.slots(); ++k)
    for (std::size_t j = 0; j < out.nodes(); ++j) {
      const double v = normal(rng);
      if (!mask || mask->contains(j)) out(k, j) = v;
    }
  return out;
}

FieldPair random_pair(const Discretization& disc, std::mt19937_64& rng) {
  return {random_field(disc, rng), random_field(disc, rng)};
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

VectorPair random_vectors(std::size_t n, std::mt19937_64& rng) {
  return {random_vector(n, rng), random_vector(n, rng)};
}

SpaceTimeField uniform_field(const Discretization& disc, std::mt19937_64& rng, double lo,
                             double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  SpaceTimeField out = disc.field();
  for (std::size_t k = 0; k < out.slots(); ++k)
    for (std::size_t j = 0; j < out.nodes(); ++j) out(k, j) = u(rng);
  return out;
}

LinearizedCoefficients random_coefficients(const Discretization& disc, std::mt19937_64& rng) {
  LinearizedCoefficients c;
  c.b1 = uniform_field(disc, rng, 0.0, 1.0);
  c.b2 = uniform_field(disc, rng, 0.0, 1.0);
  c.c1 = uniform_field(disc, rng, 0.0, 1.0);
  c.c2 = uniform_field(disc, rng, 0.0, 1.0);
  c.d = uniform_field(disc, rng, 0.5, 1.5);
  return c;
}

double relative(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace fixtures
