#include "hierctl/nash.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "hierctl/error.hpp"
#include "hierctl/kernels.hpp"

namespace hierctl {

namespace {

FieldPair tracking_source(const Problem& pb, int i, const StateTrajectory& y) {
  const auto ii = static_cast<std::size_t>(i);
  FieldPair src = pb.disc.pair();
  for (std::size_t c = 0; c < 2; ++c)
    src[c] = pb.cost.alpha[ii] *
             restrict_to_mask(y.slots[c] - pb.cost.targets[ii][c], pb.masks.observation);
  return src;
}

SpaceTimeField rho2_times(const Problem& pb, const SpaceTimeField& v) {
  SpaceTimeField out = v;
  for (std::size_t k = 0; k < v.slots(); ++k)
    out.slot(k) *= pb.cost.rho_star[k] * pb.cost.rho_star[k];
  return out;
}

}  // namespace

LinearizedCoefficients derivative_coefficients(const Problem& pb, const StateTrajectory& y) {
  LinearizedCoefficients c;
  c.c1 = kernels::pointwise_derivative(pb.dynamics.f1, y.slots[0]);
  c.c2 = kernels::pointwise_derivative(pb.dynamics.f2, y.slots[1]);
  c.b1 = kernels::mean_value_potential(pb.dynamics.f1, y.slots[0]);
  c.b2 = kernels::mean_value_potential(pb.dynamics.f2, y.slots[1]);
  c.d = pb.dynamics.d;
  return c;
}

StateTrajectory follower_state(const GameContext& ctx, const SpaceTimeField& h,
                               const FollowerPair& v) {
  const auto& pb = ctx.problem;
  const FieldPair src = control_sources(pb, h, v[0], v[1]);
  if (ctx.frozen) return solve_forward(pb.disc, pb.y0, src, ctx.frozen->state());
  return solve_forward(pb.disc, pb.y0, src, pb.dynamics, NonlinearTreatment::newton);
}

double weighted_control_norm2(const Problem& pb, int i, const SpaceTimeField& w) {
  return masked_inner(rho2_times(pb, w), w, pb.masks.follower(i), pb.disc);
}

double evaluate_J(const GameContext& ctx, int i, const SpaceTimeField& h, const FollowerPair& v) {
  const auto& pb = ctx.problem;
  const auto ii = static_cast<std::size_t>(i);
  const StateTrajectory y = follower_state(ctx, h, v);
  double track = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const SpaceTimeField e = y.slots[c] - pb.cost.targets[ii][c];
    track += masked_inner(e, e, pb.masks.observation, pb.disc);
  }
  return 0.5 * pb.cost.alpha[ii] * track + 0.5 * pb.cost.mu[ii] * weighted_control_norm2(pb, i, v[ii]);
}

SpaceTimeField gradient_J(const GameContext& ctx, int i, const SpaceTimeField& h,
                          const FollowerPair& v) {
  const auto& pb = ctx.problem;
  const auto ii = static_cast<std::size_t>(i);
  const StateTrajectory y = follower_state(ctx, h, v);
  const VectorPair zero = zero_vectors(pb.disc.nodes());
  AdjointTrajectory p;
  if (ctx.frozen) {
    p = solve_backward(pb.disc, zero, tracking_source(pb, i, y), ctx.frozen->adjoint());
  } else {
    const LinearizedCoefficients c = derivative_coefficients(pb, y);
    p = solve_backward(pb.disc, zero, tracking_source(pb, i, y), c.adjoint());
  }
  SpaceTimeField g = pb.cost.mu[ii] * rho2_times(pb, v[ii]) + p.slots[0];
  g = restrict_to_mask(g, pb.masks.follower(i));
  g.rename(i == 0 ? "grad_J1" : "grad_J2");
  return g;
}

namespace {

void package(const Problem& pb, const SpaceTimeField& h, const OptimalitySolution& sol,
             NashSolution& out) {
  out.y = sol.y;
  out.p = sol.p;
  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    out.v[ii] = follower_control(pb, i, sol.p[ii]);
    const SpaceTimeField r = pb.cost.mu[ii] * rho2_times(pb, out.v[ii]) + sol.p[ii].slots[0];
    const double num = std::sqrt(masked_inner(r, r, pb.masks.follower(i), pb.disc));
    const double den =
        std::sqrt(masked_inner(sol.p[ii].slots[0], sol.p[ii].slots[0], pb.masks.follower(i), pb.disc));
    out.characterization[ii] = den > 0.0 ? num / den : num;
  }
  const double vn = std::sqrt(norm(out.v[0], pb.disc) * norm(out.v[0], pb.disc) +
                              norm(out.v[1], pb.disc) * norm(out.v[1], pb.disc));
  out.bound_ratio = vn / (1.0 + norm(h, pb.disc));
}

}  // namespace

NashSolution solve_nash(const GameContext& ctx, const SpaceTimeField& h) {
  const auto& pb = ctx.problem;
  NashSolution out;
  if (ctx.frozen) {
    const CoupledSolver solver(pb, *ctx.frozen, ctx.method);
    const auto sol = solver.optimality(OptimalityData::of(pb, h));
    out.coeffs = *ctx.frozen;
    package(pb, h, sol, out);
    return out;
  }
  // Frozen-coefficient loop around the linear optimality system.
  StateTrajectory w = follower_state(ctx, h, {pb.disc.field(), pb.disc.field()});
  std::vector<double> history;
  for (int it = 1; it <= 100; ++it) {
    LinearizedCoefficients c = derivative_coefficients(pb, w);
    const CoupledSolver solver(pb, c, ctx.method);
    const auto sol = solver.optimality(OptimalityData::of(pb, h));
    const double change =
        norm(FieldPair{sol.y.slots[0] - w.slots[0], sol.y.slots[1] - w.slots[1]}, pb.disc);
    history.push_back(change);
    w = sol.y;
    const bool affine = pb.dynamics.f1.is_affine() && pb.dynamics.f2.is_affine();
    if (affine || change <= 1e-12 * (1.0 + norm(w.slots, pb.disc))) {
      out.coeffs = std::move(c);
      out.outer_iterations = it;
      package(pb, h, sol, out);
      return out;
    }
  }
  throw IterationError("solve_nash: frozen-coefficient loop did not converge", history);
}

double second_variation(const GameContext& ctx, int i, const SpaceTimeField& w,
                        const NashSolution& nash) {
  const auto& pb = ctx.problem;
  const auto ii = static_cast<std::size_t>(i);
  const LinearizedCoefficients c = ctx.frozen ? *ctx.frozen : derivative_coefficients(pb, nash.y);
  const VectorPair zero = zero_vectors(pb.disc.nodes());
  FieldPair src = pb.disc.pair();
  src[0] = restrict_to_mask(w, pb.masks.follower(i));
  const StateTrajectory phi = solve_forward(pb.disc, zero, src, c.adjoint());
  FieldPair back = pb.disc.pair();
  for (std::size_t comp = 0; comp < 2; ++comp) {
    back[comp] = pb.cost.alpha[ii] * restrict_to_mask(phi.slots[comp], pb.masks.observation);
    if (!ctx.frozen) {
      const Nonlinearity& f = comp == 0 ? pb.dynamics.f1 : pb.dynamics.f2;
      SpaceTimeField curv = pb.disc.field();
      for (std::size_t k = 0; k < pb.disc.slots(); ++k)
        for (std::size_t j = 0; j < pb.disc.nodes(); ++j)
          curv(k, j) = f.second_derivative(nash.y.slots[comp](k, j)) * phi.slots[comp](k, j) *
                       nash.p[ii].slots[comp](k, j);
      back[comp] -= curv;
    }
  }
  const AdjointTrajectory eta = solve_backward(pb.disc, zero, back, c.adjoint());
  return pb.cost.mu[ii] * weighted_control_norm2(pb, i, w) +
         masked_inner(eta.slots[0], w, pb.masks.follower(i), pb.disc);
}

SpaceTimeField random_direction(const Problem& pb, int i, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SpaceTimeField w = pb.disc.field("direction");
  const Mask& m = pb.masks.follower(i);
  for (std::size_t k = 0; k < w.slots(); ++k)
    for (std::size_t j = 0; j < w.nodes(); ++j)
      if (m.contains(j)) w(k, j) = normal(rng);
  const double n2 = weighted_control_norm2(pb, i, w);
  if (n2 > 0.0) w *= 1.0 / std::sqrt(n2);
  return w;
}

ConvexityReport convexity_threshold(const GameContext& ctx, int i, const NashSolution& nash,
                                    std::size_t samples, std::uint64_t seed) {
  const auto& pb = ctx.problem;
  ConvexityReport rep;
  rep.mu = pb.cost.mu[static_cast<std::size_t>(i)];
  rep.c_hat = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < samples; ++t) {
    const std::uint64_t s = kernels::trial_seed(seed, t);
    const SpaceTimeField w = random_direction(pb, i, s);
    ConvexitySample smp{s, weighted_control_norm2(pb, i, w), second_variation(ctx, i, w, nash)};
    if (!(smp.norm2 > 0.0)) continue;
    rep.c_hat = std::max(rep.c_hat, rep.mu - smp.variation / smp.norm2);
    rep.samples.push_back(smp);
  }
  if (rep.samples.empty()) throw DomainError("convexity_threshold: follower set is empty");
  return rep;
}

}  // namespace hierctl
