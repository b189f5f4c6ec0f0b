#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "hierctl/config.hpp"

namespace fixtures {

/// Default configuration shrunk to n x m, with the given nonlinearity ("tanh", "linear", "zero").
hierctl::RunConfig small_config(std::size_t n, std::size_t m, const std::string& f = "tanh");

std::unique_ptr<hierctl::Setup> small_setup(std::size_t n, std::size_t m,
                                            const std::string& f = "tanh");

/// Standard normal entries, optionally zero outside a mask.
hierctl::SpaceTimeField random_field(const hierctl::Discretization& disc, std::mt19937_64& rng,
                                     const hierctl::Mask* mask = nullptr);
hierctl::FieldPair random_pair(const hierctl::Discretization& disc, std::mt19937_64& rng);
hierctl::Vector random_vector(std::size_t n, std::mt19937_64& rng);
hierctl::VectorPair random_vectors(std::size_t n, std::mt19937_64& rng);
/// Entries uniform in [lo, hi].
hierctl::SpaceTimeField uniform_field(const hierctl::Discretization& disc, std::mt19937_64& rng,
                                      double lo, double hi);

/// Random frozen coefficients: b, c in [0, 1], d in [0.5, 1.5].
hierctl::LinearizedCoefficients random_coefficients(const hierctl::Discretization& disc,
                                                    std::mt19937_64& rng);

/// |a - b| / max(|a|, |b|, tiny).
double relative(double a, double b);

}  // namespace fixtures
