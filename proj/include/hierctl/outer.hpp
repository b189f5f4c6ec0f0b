#pragma once

#include <array>
#include <vector>

#include "hierctl/kernels.hpp"
#include "hierctl/leader.hpp"
#include "hierctl/nash.hpp"

namespace hierctl {

struct OuterConfig {
  int max_iter = 50;
  /// Stop when |w_{k+1} - w_k| in L2(Q) drops below tol.
  double tol = 1e-8;
  /// w_{k+1} = (1 - damping) w_k + damping y_k, damping in (0,1].
  double damping = 0.5;
  PenalizationConfig leader;
  CoupledMethod method = CoupledMethod::monolithic;
  /// Start each leader solve from the previous leader control instead of zero.
  bool warm_start = true;
};

/// b_i = int_0^1 F_i'(s w_i) ds and c_i = F_i'(w_i), both checked against the bound M.
LinearizedCoefficients freeze_coefficients(const Problem& pb, const StateTrajectory& w,
                                           kernels::Exec exec = kernels::Exec::parallel);

struct OuterResult {
  SpaceTimeField h;
  FollowerPair v;
  StateTrajectory trajectory;
  LinearizedCoefficients coeffs;
  LeaderResult leader;
  std::vector<double> changes;
  int iterations = 0;
  bool converged = false;
  std::array<double, 2> terminal_norms{0.0, 0.0};
  double terminal_norm = 0.0;
  /// Residual of the original nonlinear state equation and of the follower adjoints at c = F'(y).
  double state_residual = 0.0;
  double adjoint_residual = 0.0;
  /// sup_t |y(t)| / (|y0| + |h| + sum_i |targets_i|).
  double bound_ratio = 0.0;
};

/// Uncontrolled nonlinear trajectory (h = v = 0), the starting iterate.
StateTrajectory uncontrolled_trajectory(const Problem& pb);

/**
 * Damped Picard loop: freeze coefficients at w, solve the linear leader/follower problem at the
 * working eps, relax w toward the new state. Affine dynamics finish after one iteration.
 * Throws IterationError with the change history when max_iter is reached.
 */
OuterResult run_stackelberg_nash(const Problem& pb, const OuterConfig& cfg,
                                 const StateTrajectory* start = nullptr);

}  // namespace hierctl
