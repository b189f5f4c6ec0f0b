#pragma once

#include <string>
#include <vector>

#include "hierctl/grid.hpp"
#include "hierctl/kernels.hpp"

namespace hierctl {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x > lo && x < hi; }
  /// Closure of this interval lies inside the open interval `outer`.
  bool compactly_inside(const Interval& outer) const { return lo > outer.lo && hi < outer.hi; }
  double center() const { return 0.5 * (lo + hi); }
};

/**
 * sigma(x) = A x(1-x) exp(c (x_c - x)), x_c the center of the plateau set O0
 * (or 1/2 when O0 contains it). c = (1 - 2 x_c) / (x_c (1 - x_c)) puts the only
 * critical point at x_c, so c = 0 and sigma = x(1-x) whenever 1/2 lies in O0.
 */
struct SigmaProfile {
  Interval plateau;
  double center = 0.5;
  double tilt = 0.0;
  double amplitude = 1.0;
  double sup = 0.25;
  Vector values;
  Vector derivative;
  /// Nodes where the sampled derivative changes sign or vanishes.
  std::vector<std::size_t> critical_nodes;

  double value_at(double x) const;
  double derivative_at(double x) const;
};

/// `sup_norm` rescales the profile to a prescribed maximum; zero keeps A = 1.
SigmaProfile build_sigma(const SpaceGrid& grid, const Interval& o0, double sup_norm = 0.0);

struct CarlemanParams {
  double alpha = 0.5;
  double sigma_sup = 0.25;
  double r = 0.0;
  double dbar = 0.0;
  double lambda = 0.0;
  Interval lambda_range;
  double s = 1.0;
  double tau() const { return alpha; }
};

/// r at its lower bound, dbar = 5/(2-alpha), lambda the midpoint of the admissible interval.
CarlemanParams choose_parameters(double alpha, double sigma_sup, double s = 1.0);
CarlemanParams choose_parameters(const Degeneracy& a, const SigmaProfile& sigma, double s = 1.0);

/// delta(x) = lambda (x^{2-alpha}/(2-alpha) - dbar).
double carleman_delta(const CarlemanParams& p, double x);

/// Theta(t) = 1/(t(T-t))^4.
double carleman_theta(double t, double horizon);

/**
 * Largest s = 2^k (k may be negative) with e^{2 s (max phi - min phi)} <= range over the
 * grid samples of phi. Keeps exp(s phi) well inside double range near t = 0 and t = T.
 */
double calibrate_s(const CarlemanParams& p, const TimeGrid& time, const SpaceGrid& space,
                   double range = 1e12);

/// Weights sampled at slot midpoints (time) and interior nodes (space).
struct WeightBundle {
  CarlemanParams params;
  Vector theta, theta_tilde;       // per slot
  Vector delta, exp_r_sigma, psi;  // per node
  SpaceTimeField phi, eta, Phi, phi_tilde;
  Vector phi_star, phi_hat, rho_star, kappa;  // per slot
  /// rho_star^{-2} = e^{s phi_star}.
  Vector follower_weight;
};

/// Builds every weight and checks the pointwise inequalities; throws ParameterError naming the
/// violated inequality and the worst grid point.
WeightBundle build_weights(const CarlemanParams& p, const Discretization& disc,
                           const SigmaProfile& sigma);

struct FunctionalTerms {
  double time_and_operator = 0.0;
  double zeroth_order = 0.0;
  double gradient = 0.0;
  double total() const { return time_and_operator + zeroth_order + gradient; }
};

/// Carleman functional I(z), z sampled at the slot midpoints.
FunctionalTerms functional_I(const SpaceTimeField& z, const WeightBundle& w,
                             const Discretization& disc,
                             kernels::Exec exec = kernels::Exec::parallel);

/// Localized functional K(z) on (0,T) x (b1,b2) with the eta / Phi weights.
FunctionalTerms functional_K(const SpaceTimeField& z, const WeightBundle& w,
                             const Discretization& disc, const Interval& band,
                             kernels::Exec exec = kernels::Exec::parallel);

}  // namespace hierctl
