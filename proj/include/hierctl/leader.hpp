#pragma once

#include <array>
#include <vector>

#include "hierctl/pde.hpp"

namespace hierctl {

struct PenalizationConfig {
  double epsilon = 1e-4;
  /// Stop when |grad J(h)| <= tol * |grad J(0)|.
  double tol = 1e-8;
  int max_iter = 2000;
  /// Initial guess; an empty field means h0 = 0.
  SpaceTimeField h0;
};

struct LeaderResult {
  SpaceTimeField h;
  OptimalitySolution state;
  std::array<double, 2> terminal_norms{0.0, 0.0};
  double terminal_norm = 0.0;
  double h_norm = 0.0;
  double objective = 0.0;
  int iterations = 0;
  /// |h - rho_1 chi_omega| / (1 + |h|), from a fresh gradient evaluation.
  double residual = 0.0;
  std::vector<double> objective_history;
  std::vector<double> gradient_history;
};

/**
 * J_eps(h) = |y(T)|^2 / (2 eps) + |h|^2 / 2 over controls supported in omega, with the
 * followers at their Nash response. The map h -> y is affine, so J_eps is quadratic and is
 * minimized by conjugate gradients. The underlying factorizations are reused for every
 * evaluation.
 */
class LeaderProblem {
 public:
  LeaderProblem(const Problem& pb, const LinearizedCoefficients& coeffs,
                CoupledMethod method = CoupledMethod::monolithic, PicardOptions picard = {});

  double evaluate(const SpaceTimeField& h, double eps) const;
  SpaceTimeField gradient(const SpaceTimeField& h, double eps) const;
  LeaderResult minimize(const PenalizationConfig& cfg) const;

  const Problem& problem() const { return pb_; }
  const CoupledSolver& solver() const { return solver_; }

 private:
  const Problem& pb_;
  CoupledSolver solver_;

  VectorPair terminal(const OptimalityData& data) const;
  SpaceTimeField adjoint_gradient(const SpaceTimeField& h, const VectorPair& yT, double eps) const;
};

double evaluate_Jeps(const LeaderProblem& lp, const SpaceTimeField& h, double eps);
SpaceTimeField gradient_Jeps(const LeaderProblem& lp, const SpaceTimeField& h, double eps);
LeaderResult minimize_penalized(const LeaderProblem& lp, const PenalizationConfig& cfg);

struct SweepRow {
  double epsilon = 0.0;
  double y1 = 0.0, y2 = 0.0, y = 0.0;
  double h_norm = 0.0;
  int iterations = 0;
  double residual = 0.0;
  /// Slope of log|y(T)| against log eps on the segment ending at this row.
  double local_slope = 0.0;
  bool in_window = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0.0;
  /// max |h| / min |h| over the fit window.
  double h_variation = 0.0;
  std::size_t window = 0;
};

/**
 * Minimizes J_eps for each eps (decreasing, warm-started) and fits log|y(T)| against log eps.
 * The window is the leading run of rows before the decay stalls: a row starts the plateau when
 * the local slope entering it drops below a quarter of the previous local slope.
 */
SweepResult epsilon_sweep(const LeaderProblem& lp, const std::vector<double>& epsilons,
                          const PenalizationConfig& base);

}  // namespace hierctl
