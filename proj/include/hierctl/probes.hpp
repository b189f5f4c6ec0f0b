#pragma once

#include <cstdint>
#include <vector>

#include "hierctl/carleman.hpp"
#include "hierctl/pde.hpp"

namespace hierctl {

struct ProbeTrial {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool skipped = false;
};

struct ProbeReport {
  std::vector<ProbeTrial> trials;
  double worst = 0.0;
  double median = 0.0;
  double best = 0.0;
  /// max / min over the accepted trials.
  double spread() const { return best > 0.0 ? worst / best : 0.0; }
  std::size_t accepted() const;
};

/// Fills worst, median and smallest ratio from the accepted trials.
void summarize(ProbeReport& report);

/**
 * Discrete Hardy quotient [sum (a/x^2) z^2 w] / [sum a(mid) (dz/h)^2 h] for values z on the
 * extended nodes 0 = x_0 < ... < x_{N+1} = 1 with z(0) = 0. The x = 1 node enters with half
 * weight and the x = 0 node contributes nothing.
 */
ProbeTrial hardy_quotient(const Degeneracy& a, const SpaceGrid& grid, const Vector& z_extended);

/// Worst Hardy quotient over random smooth z (sine sums vanishing at 0).
ProbeReport probe_hardy(const Degeneracy& a, const SpaceGrid& grid, std::size_t trials,
                        std::uint64_t seed, kernels::Exec exec = kernels::Exec::parallel);

/// Smooth random terminal pair (sine sums vanishing at both ends).
VectorPair random_terminal(const SpaceGrid& grid, std::uint64_t seed, std::size_t modes = 6);

/// Caccioppoli quotient of one coupled adjoint solution: weighted gradients on `inner`
/// over weighted values on `outer`.
ProbeTrial caccioppoli_quotient(const CoupledAdjointSolution& sol, const WeightBundle& w,
                                const Discretization& disc, const Interval& inner,
                                const Interval& outer);

ProbeReport probe_caccioppoli(const CoupledSolver& solver, const WeightBundle& w,
                              const Interval& inner, const Interval& outer, std::size_t trials,
                              std::uint64_t seed);

/// LHS = |rho(0)|^2 + sum_i int kappa^2 |psi^i|^2, RHS = int_omega |rho_1|^2.
ProbeTrial observability_quotient(const CoupledAdjointSolution& sol, const WeightBundle& w,
                                  const Problem& pb);

ProbeReport probe_observability(const CoupledSolver& solver, const WeightBundle& w,
                                std::size_t trials, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hierctl
