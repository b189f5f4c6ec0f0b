#pragma once

#include <array>
#include <memory>
#include <vector>

#include "hierctl/grid.hpp"
#include "hierctl/nonlinearity.hpp"

namespace hierctl {

/// Zeroth-order potentials of one coupled system: q1, q2 on the diagonal, d coupling y1 into y2.
struct Potentials {
  const SpaceTimeField& q1;
  const SpaceTimeField& q2;
  const SpaceTimeField& d;
};

/// Frozen coefficients of the linearized state (b) and adjoint (c) systems.
struct LinearizedCoefficients {
  SpaceTimeField b1, b2, c1, c2, d;

  static LinearizedCoefficients constant(const Discretization& disc, double b, double c,
                                         double d);
  Potentials state() const { return {b1, b2, d}; }
  Potentials adjoint() const { return {c1, c2, d}; }
  bool all_finite() const;
  double sup_norm() const;
};

/// Forward trajectory. Slot k holds the state at t_{k+1}.
struct StateTrajectory {
  VectorPair initial;
  FieldPair slots;
  VectorPair terminal() const;
};

/// Backward trajectory. Slot k holds the adjoint at t_k, so slot 0 is the value at t = 0.
struct AdjointTrajectory {
  VectorPair terminal;
  FieldPair slots;
  VectorPair initial() const;
};

enum class TimeScheme { implicit_euler, crank_nicolson };
enum class NonlinearTreatment { semi_implicit, newton };

struct NonlinearDynamics {
  Nonlinearity f1, f2;
  SpaceTimeField d;
};

/// Linear forward solve with the block lower-triangular coupling: y1 first, then y2.
StateTrajectory solve_forward(const Discretization& disc, const VectorPair& y0,
                              const FieldPair& sources, const Potentials& pot,
                              TimeScheme scheme = TimeScheme::implicit_euler);

/// Nonlinear forward solve. Semi-implicit evaluates F at the previous step; Newton solves the
/// fully implicit step (y^k - y^{k-1}) + dt (L y^k + F(y^k)) = dt f^k.
StateTrajectory solve_forward(const Discretization& disc, const VectorPair& y0,
                              const FieldPair& sources, const NonlinearDynamics& dyn,
                              NonlinearTreatment treatment = NonlinearTreatment::semi_implicit);

/// Backward solve of the transposed system (p2 first, then p1 with the +d p2 term).
/// With implicit Euler this is the exact discrete adjoint of solve_forward.
AdjointTrajectory solve_backward(const Discretization& disc, const VectorPair& terminal,
                                 const FieldPair& sources, const Potentials& pot,
                                 TimeScheme scheme = TimeScheme::implicit_euler);

/// Left and right sides of the discrete duality identity for implicit Euler.
struct DualityPairing {
  double forward_side = 0.0;
  double backward_side = 0.0;
  double relative_gap() const;
};

DualityPairing duality_pairing(const Discretization& disc, const VectorPair& y0,
                               const FieldPair& forward_sources, const VectorPair& terminal,
                               const FieldPair& backward_sources, const Potentials& pot);

/// Geometry of the game.
struct ControlGeometry {
  Mask leader;
  Mask follower1;
  Mask follower2;
  Mask observation;
  const Mask& follower(int i) const { return i == 0 ? follower1 : follower2; }
};

struct CostConfig {
  std::array<double, 2> alpha{1.0, 1.0};
  std::array<double, 2> mu{100.0, 100.0};
  /// targets[i][j]: player i's target for component j.
  std::array<FieldPair, 2> targets;
  /// rho_star per slot and the follower weight rho_star^{-2}.
  Vector rho_star;
  Vector follower_weight;
};

struct Problem {
  Discretization disc;
  ControlGeometry masks;
  CostConfig cost;
  VectorPair y0;
  NonlinearDynamics dynamics;
};

/// Source pair (h chi_omega + v1 chi_1 + v2 chi_2, 0).
FieldPair control_sources(const Problem& pb, const SpaceTimeField& h, const SpaceTimeField& v1,
                          const SpaceTimeField& v2);

enum class CoupledMethod { monolithic, picard };

struct PicardOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 500;
};

/// Data of the follower optimality system at a fixed leader control.
struct OptimalityData {
  SpaceTimeField h;
  VectorPair y0;
  std::array<FieldPair, 2> targets;

  static OptimalityData of(const Problem& pb, const SpaceTimeField& h);
  static OptimalityData homogeneous(const Problem& pb, const SpaceTimeField& h);
};

struct OptimalitySolution {
  StateTrajectory y;
  std::array<AdjointTrajectory, 2> p;
  std::vector<double> history;
};

struct CoupledAdjointSolution {
  AdjointTrajectory rho;
  std::array<StateTrajectory, 2> psi;
  /// alpha_1 psi^1 + alpha_2 psi^2, componentwise.
  FieldPair varrho;
  std::vector<double> history;
};

/// v^i = -(1/mu_i) rho_star^{-2} p_1^i chi_i.
SpaceTimeField follower_control(const Problem& pb, int i, const AdjointTrajectory& p);

/**
 * Solves the linear forward-backward systems for one set of frozen coefficients.
 * The monolithic path factors each space-time matrix once and reuses it for every
 * right-hand side.
 */
class CoupledSolver {
 public:
  CoupledSolver(const Problem& pb, const LinearizedCoefficients& coeffs,
                CoupledMethod method = CoupledMethod::monolithic, PicardOptions picard = {});
  ~CoupledSolver();
  CoupledSolver(CoupledSolver&&) noexcept;
  CoupledSolver& operator=(CoupledSolver&&) = delete;

  OptimalitySolution optimality(const OptimalityData& data) const;
  CoupledAdjointSolution adjoint(const VectorPair& rho_terminal) const;

  /// Picard with an explicit starting guess for the follower adjoints.
  OptimalitySolution optimality_picard(const OptimalityData& data,
                                       const std::array<FieldPair, 2>& p_start) const;

  const Problem& problem() const { return pb_; }
  const LinearizedCoefficients& coefficients() const { return coeffs_; }
  CoupledMethod method() const { return method_; }

 private:
  struct Factors;
  const Problem& pb_;
  const LinearizedCoefficients& coeffs_;
  CoupledMethod method_;
  PicardOptions picard_;
  mutable std::unique_ptr<Factors> factors_;

  OptimalitySolution optimality_monolithic(const OptimalityData& data) const;
  CoupledAdjointSolution adjoint_monolithic(const VectorPair& rho_terminal) const;
  CoupledAdjointSolution adjoint_picard(const VectorPair& rho_terminal) const;
};

OptimalitySolution solve_coupled_optimality(const SpaceTimeField& h, const Problem& pb,
                                            const LinearizedCoefficients& coeffs,
                                            CoupledMethod method = CoupledMethod::monolithic);

CoupledAdjointSolution solve_coupled_adjoint(const VectorPair& rho_terminal, const Problem& pb,
                                             const LinearizedCoefficients& coeffs,
                                             CoupledMethod method = CoupledMethod::monolithic);

/// Largest absolute equation residual of the six optimality equations.
double optimality_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                           const OptimalityData& data, const OptimalitySolution& sol);

/// Largest absolute equation residual of the six coupled adjoint equations.
double adjoint_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                        const VectorPair& rho_terminal, const CoupledAdjointSolution& sol);

/// Residual of the aggregated forward system solved by varrho.
double varrho_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                       const CoupledAdjointSolution& sol);

/// Implicit Euler residual of a forward trajectory, max over all points.
double forward_residual(const Discretization& disc, const StateTrajectory& y,
                        const FieldPair& sources, const Potentials& pot);

/// Implicit Euler residual of a backward trajectory, max over all points.
double backward_residual(const Discretization& disc, const AdjointTrajectory& p,
                         const FieldPair& sources, const Potentials& pot);

/// Residual of the fully implicit nonlinear state scheme.
double nonlinear_residual(const Discretization& disc, const StateTrajectory& y,
                          const FieldPair& sources, const NonlinearDynamics& dyn);

}  // namespace hierctl
