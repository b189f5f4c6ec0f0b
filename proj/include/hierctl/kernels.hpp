#pragma once

// Hot loops with an OpenMP implementation and a plain serial reference.
// The parallel versions never reduce across threads in a scheduling-dependent
// order, so their output does not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "hierctl/grid.hpp"
#include "hierctl/nonlinearity.hpp"

namespace hierctl::kernels {

enum class Exec { serial, parallel };

/// Sum of term(k) for k < count, accumulated in index order after the terms are computed.
template <class Term>
double ordered_sum(std::size_t count, Term&& term, Exec exec = Exec::parallel) {
  std::vector<double> parts(count, 0.0);
  const auto n = static_cast<std::int64_t>(count);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) parts[static_cast<std::size_t>(k)] = term(static_cast<std::size_t>(k));
  } else {
    for (std::int64_t k = 0; k < n; ++k) parts[static_cast<std::size_t>(k)] = term(static_cast<std::size_t>(k));
  }
  return std::accumulate(parts.begin(), parts.end(), 0.0);
}

/// Runs body(i) for i < count; each index writes only its own outputs.
template <class Body>
void for_each_index(std::size_t count, Body&& body, Exec exec = Exec::parallel) {
  const auto n = static_cast<std::int64_t>(count);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
}

/// int_0^1 F'(s w) ds at every point, 16-point Gauss-Legendre in s.
SpaceTimeField mean_value_potential(const Nonlinearity& f, const SpaceTimeField& w,
                                    Exec exec = Exec::parallel);

/// F'(w) at every point.
SpaceTimeField pointwise_derivative(const Nonlinearity& f, const SpaceTimeField& w,
                                    Exec exec = Exec::parallel);

/// Weighted space-time quadrature dt * sum_k sum_j wx_j g(k,j) of a product integrand
/// g = f(k,j) * e^{2 s phi(k,j)}, evaluated slot by slot.
double weighted_quadrature(const SpaceTimeField& integrand, const SpaceTimeField& phi, double s,
                           const Vector& space_weights, double dt, Exec exec = Exec::parallel);

/// Straight nested loop with a single running sum. Reference for weighted_quadrature.
double weighted_quadrature_reference(const SpaceTimeField& integrand, const SpaceTimeField& phi,
                                     double s, const Vector& space_weights, double dt);

/// Seed of trial `index`, derived from the base seed through std::seed_seq.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index);

}  // namespace hierctl::kernels
