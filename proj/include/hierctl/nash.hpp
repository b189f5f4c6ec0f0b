#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hierctl/pde.hpp"

namespace hierctl {

/**
 * Dynamics seen by the followers. With `frozen` set the state equation is the linear system
 * with those coefficients; otherwise it is the problem's nonlinear system, discretized fully
 * implicitly so that the adjoint gradient is exact.
 */
struct GameContext {
  const Problem& problem;
  std::optional<LinearizedCoefficients> frozen;
  CoupledMethod method = CoupledMethod::monolithic;
};

using FollowerPair = std::array<SpaceTimeField, 2>;

struct NashSolution {
  FollowerPair v;
  StateTrajectory y;
  std::array<AdjointTrajectory, 2> p;
  /// Coefficients of the last linear solve (the frozen ones in the linear case).
  LinearizedCoefficients coeffs;
  /// |mu_i rho^2 v^i + p_1^i| / |p_1^i| on omega_i.
  std::array<double, 2> characterization{0.0, 0.0};
  /// |(v1, v2)| / (1 + |h|).
  double bound_ratio = 0.0;
  int outer_iterations = 1;
};

StateTrajectory follower_state(const GameContext& ctx, const SpaceTimeField& h,
                               const FollowerPair& v);

double evaluate_J(const GameContext& ctx, int i, const SpaceTimeField& h, const FollowerPair& v);

/// Riesz representative of D_i J_i: chi_i (mu_i rho^2 v^i + p_1^i).
SpaceTimeField gradient_J(const GameContext& ctx, int i, const SpaceTimeField& h,
                          const FollowerPair& v);

NashSolution solve_nash(const GameContext& ctx, const SpaceTimeField& h);

/// D_i^2 J_i (w, w) = mu_i <rho^2 w, w> + <eta_1, w> at the equilibrium.
double second_variation(const GameContext& ctx, int i, const SpaceTimeField& w,
                        const NashSolution& nash);

/// <rho^2 w, w> over omega_i.
double weighted_control_norm2(const Problem& pb, int i, const SpaceTimeField& w);

struct ConvexitySample {
  std::uint64_t seed = 0;
  double norm2 = 0.0;
  double variation = 0.0;
};

struct ConvexityReport {
  /// max over samples of (mu_i - D^2 J(w,w) / |w|_rho^2).
  double c_hat = 0.0;
  double mu = 0.0;
  std::vector<ConvexitySample> samples;
};

/// Random directions on omega_i, normalized in the rho-weighted norm.
SpaceTimeField random_direction(const Problem& pb, int i, std::uint64_t seed);

ConvexityReport convexity_threshold(const GameContext& ctx, int i, const NashSolution& nash,
                                    std::size_t samples, std::uint64_t seed);

/// Adjoint potentials c = F'(y) plus the coupling of the problem.
LinearizedCoefficients derivative_coefficients(const Problem& pb, const StateTrajectory& y);

}  // namespace hierctl
