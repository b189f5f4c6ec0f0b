#include "hierctl/outer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hierctl/error.hpp"
#include "hierctl/nash.hpp"

namespace hierctl {

LinearizedCoefficients freeze_coefficients(const Problem& pb, const StateTrajectory& w,
                                           kernels::Exec exec) {
  for (std::size_t c = 0; c < 2; ++c)
    if (!w.slots[c].all_finite()) throw NumericError("freeze_coefficients: iterate is not finite");
  LinearizedCoefficients out;
  out.b1 = kernels::mean_value_potential(pb.dynamics.f1, w.slots[0], exec);
  out.b2 = kernels::mean_value_potential(pb.dynamics.f2, w.slots[1], exec);
  out.c1 = kernels::pointwise_derivative(pb.dynamics.f1, w.slots[0], exec);
  out.c2 = kernels::pointwise_derivative(pb.dynamics.f2, w.slots[1], exec);
  out.d = pb.dynamics.d;
  if (!out.all_finite()) throw NumericError("freeze_coefficients: quadrature is not finite");
  const std::array<std::pair<const SpaceTimeField*, const Nonlinearity*>, 4> checks{
      {{&out.b1, &pb.dynamics.f1}, {&out.b2, &pb.dynamics.f2},
       {&out.c1, &pb.dynamics.f1}, {&out.c2, &pb.dynamics.f2}}};
  const char* names[] = {"b1", "b2", "c1", "c2"};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const double m = checks[i].second->bound();
    if (checks[i].first->max_abs() > m * (1.0 + 1e-12))
      throw NumericError(std::string("freeze_coefficients: |") + names[i] + "| exceeds M");
  }
  return out;
}

StateTrajectory uncontrolled_trajectory(const Problem& pb) {
  return solve_forward(pb.disc, pb.y0, pb.disc.pair(), pb.dynamics, NonlinearTreatment::newton);
}

namespace {

double sup_norm_in_time(const StateTrajectory& y, const SpaceGrid& grid) {
  double worst = std::sqrt(inner(y.initial[0], y.initial[0], grid) +
                           inner(y.initial[1], y.initial[1], grid));
  for (std::size_t k = 0; k < y.slots[0].slots(); ++k) {
    const Vector a = y.slots[0].slot(k).transpose();
    const Vector b = y.slots[1].slot(k).transpose();
    worst = std::max(worst, std::sqrt(inner(a, a, grid) + inner(b, b, grid)));
  }
  return worst;
}

}  // namespace

OuterResult run_stackelberg_nash(const Problem& pb, const OuterConfig& cfg,
                                 const StateTrajectory* start) {
  if (!(cfg.tol > 0.0)) throw ConfigError("outer_tol: must be positive");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw ConfigError("damping: must lie in (0,1]");
  if (cfg.max_iter < 1) throw ConfigError("outer_max_iter: must be at least 1");
  const auto& disc = pb.disc;
  const bool affine = pb.dynamics.f1.is_affine() && pb.dynamics.f2.is_affine();

  OuterResult out;
  StateTrajectory w = start ? *start : uncontrolled_trajectory(pb);
  PenalizationConfig lcfg = cfg.leader;
  for (int it = 1;; ++it) {
    LinearizedCoefficients coeffs = freeze_coefficients(pb, w);
    const LeaderProblem lp(pb, coeffs, cfg.method);
    LeaderResult res = lp.minimize(lcfg);
    if (cfg.warm_start) lcfg.h0 = res.h;
    const StateTrajectory& y = res.state.y;
    FieldPair next = disc.pair();
    for (std::size_t c = 0; c < 2; ++c)
      next[c] = (1.0 - cfg.damping) * w.slots[c] + cfg.damping * y.slots[c];
    const double change =
        norm(FieldPair{next[0] - w.slots[0], next[1] - w.slots[1]}, disc);
    out.changes.push_back(change);
    w.slots = std::move(next);
    w.initial = pb.y0;
    out.iterations = it;
    if (affine || change < cfg.tol) {
      out.converged = true;
      out.coeffs = std::move(coeffs);
      out.leader = std::move(res);
      break;
    }
    if (it >= cfg.max_iter)
      throw IterationError("run_stackelberg_nash: no fixed point within max_iter", out.changes);
  }

  const OptimalitySolution& sol = out.leader.state;
  out.h = out.leader.h;
  out.v = {follower_control(pb, 0, sol.p[0]), follower_control(pb, 1, sol.p[1])};
  out.trajectory = sol.y;
  out.terminal_norms = out.leader.terminal_norms;
  out.terminal_norm = out.leader.terminal_norm;

  const FieldPair src = control_sources(pb, out.h, out.v[0], out.v[1]);
  out.state_residual = nonlinear_residual(disc, sol.y, src, pb.dynamics);
  const LinearizedCoefficients live = derivative_coefficients(pb, sol.y);
  double adj = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    FieldPair back = disc.pair();
    for (std::size_t c = 0; c < 2; ++c)
      back[c] = pb.cost.alpha[i] *
                restrict_to_mask(sol.y.slots[c] - pb.cost.targets[i][c], pb.masks.observation);
    adj = std::max(adj, backward_residual(disc, sol.p[i], back, live.adjoint()));
  }
  out.adjoint_residual = adj;

  double data = std::sqrt(inner(pb.y0[0], pb.y0[0], disc.space) +
                          inner(pb.y0[1], pb.y0[1], disc.space)) +
                norm(out.h, disc);
  for (std::size_t i = 0; i < 2; ++i) data += norm(pb.cost.targets[i], disc);
  out.bound_ratio = data > 0.0 ? sup_norm_in_time(sol.y, disc.space) / data : 0.0;
  return out;
}

}  // namespace hierctl
