#include "hierctl/leader.hpp"

#include <algorithm>
#include <cmath>

#include "hierctl/error.hpp"
#include "hierctl/probes.hpp"

namespace hierctl {

LeaderProblem::LeaderProblem(const Problem& pb, const LinearizedCoefficients& coeffs,
                             CoupledMethod method, PicardOptions picard)
    : pb_(pb), solver_(pb, coeffs, method, picard) {}

VectorPair LeaderProblem::terminal(const OptimalityData& data) const {
  return solver_.optimality(data).y.terminal();
}

SpaceTimeField LeaderProblem::adjoint_gradient(const SpaceTimeField& h, const VectorPair& yT,
                                               double eps) const {
  const VectorPair rhoT{-yT[0] / eps, -yT[1] / eps};
  const auto adj = solver_.adjoint(rhoT);
  SpaceTimeField g = restrict_to_mask(h - adj.rho.slots[0], pb_.masks.leader);
  g.rename("grad_Jeps");
  return g;
}

double LeaderProblem::evaluate(const SpaceTimeField& h, double eps) const {
  if (!(eps > 0.0)) throw ConfigError("epsilon: must be positive");
  const SpaceTimeField hm = restrict_to_mask(h, pb_.masks.leader);
  const VectorPair yT = terminal(OptimalityData::of(pb_, hm));
  const double t = inner(yT[0], yT[0], pb_.disc.space) + inner(yT[1], yT[1], pb_.disc.space);
  const double hn = norm(hm, pb_.disc);
  return 0.5 * t / eps + 0.5 * hn * hn;
}

SpaceTimeField LeaderProblem::gradient(const SpaceTimeField& h, double eps) const {
  if (!(eps > 0.0)) throw ConfigError("epsilon: must be positive");
  const SpaceTimeField hm = restrict_to_mask(h, pb_.masks.leader);
  return adjoint_gradient(hm, terminal(OptimalityData::of(pb_, hm)), eps);
}

LeaderResult LeaderProblem::minimize(const PenalizationConfig& cfg) const {
  const double eps = cfg.epsilon;
  if (!(eps > 0.0)) throw ConfigError("epsilon: must be positive");
  if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) throw ConfigError("cg_tol: must lie in (0,1)");
  const auto& disc = pb_.disc;
  const auto& space = disc.space;
  auto sq = [&](const VectorPair& v) { return inner(v[0], v[0], space) + inner(v[1], v[1], space); };

  SpaceTimeField h = cfg.h0.slots() ? restrict_to_mask(cfg.h0, pb_.masks.leader) : disc.field();
  h.rename("h");
  const VectorPair y_free = terminal(OptimalityData::of(pb_, disc.field()));
  const SpaceTimeField g_zero = adjoint_gradient(disc.field(), y_free, eps);
  const double reference = norm(g_zero, disc);

  // y(T) is affine in h: y(T; h) = y_free + Lambda h.
  VectorPair yT = y_free;
  SpaceTimeField r = -1.0 * g_zero;
  if (h.max_abs() > 0.0) {
    yT = terminal(OptimalityData::of(pb_, h));
    r = -1.0 * adjoint_gradient(h, yT, eps);
  }
  LeaderResult out;
  auto objective = [&]() {
    const double hn = norm(h, disc);
    return 0.5 * sq(yT) / eps + 0.5 * hn * hn;
  };
  out.objective_history.push_back(objective());
  double rr = inner(r, r, disc);
  out.gradient_history.push_back(std::sqrt(rr));
  SpaceTimeField dir = r;
  int it = 0;
  while (std::sqrt(rr) > cfg.tol * reference) {
    if (it >= cfg.max_iter)
      throw IterationError("minimize_penalized: conjugate gradient hit max_iter",
                           out.gradient_history);
    const VectorPair lam = terminal(OptimalityData::homogeneous(pb_, dir));
    const SpaceTimeField hd = adjoint_gradient(dir, lam, eps);
    const double curv = inner(dir, hd, disc);
    if (!(curv > 0.0)) throw NumericError("minimize_penalized: non-positive curvature");
    const double step = rr / curv;
    h += step * dir;
    yT[0] += step * lam[0];
    yT[1] += step * lam[1];
    r -= step * hd;
    const double rr_new = inner(r, r, disc);
    dir = r + (rr_new / rr) * dir;
    rr = rr_new;
    ++it;
    out.objective_history.push_back(objective());
    out.gradient_history.push_back(std::sqrt(rr));
  }
  out.iterations = it;
  out.h = h;
  out.state = solver_.optimality(OptimalityData::of(pb_, h));
  const VectorPair y_final = out.state.y.terminal();
  const SpaceTimeField g = adjoint_gradient(h, y_final, eps);
  out.h_norm = norm(h, disc);
  out.residual = norm(g, disc) / (1.0 + out.h_norm);
  out.terminal_norms = {std::sqrt(inner(y_final[0], y_final[0], space)),
                        std::sqrt(inner(y_final[1], y_final[1], space))};
  out.terminal_norm = std::sqrt(sq(y_final));
  out.objective = 0.5 * sq(y_final) / eps + 0.5 * out.h_norm * out.h_norm;
  return out;
}

double evaluate_Jeps(const LeaderProblem& lp, const SpaceTimeField& h, double eps) {
  return lp.evaluate(h, eps);
}

SpaceTimeField gradient_Jeps(const LeaderProblem& lp, const SpaceTimeField& h, double eps) {
  return lp.gradient(h, eps);
}

LeaderResult minimize_penalized(const LeaderProblem& lp, const PenalizationConfig& cfg) {
  return lp.minimize(cfg);
}

SweepResult epsilon_sweep(const LeaderProblem& lp, const std::vector<double>& epsilons,
                          const PenalizationConfig& base) {
  if (epsilons.size() < 4) throw ConfigError("epsilon ladder: need at least 4 values");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1])) throw ConfigError("epsilon ladder: must be decreasing");
  SweepResult res;
  PenalizationConfig cfg = base;
  for (double eps : epsilons) {
    cfg.epsilon = eps;
    const LeaderResult r = lp.minimize(cfg);
    cfg.h0 = r.h;
    SweepRow row;
    row.epsilon = eps;
    row.y1 = r.terminal_norms[0];
    row.y2 = r.terminal_norms[1];
    row.y = r.terminal_norm;
    row.h_norm = r.h_norm;
    row.iterations = r.iterations;
    row.residual = r.residual;
    res.rows.push_back(row);
  }
  auto& rows = res.rows;
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].local_slope = (std::log(rows[i].y) - std::log(rows[i - 1].y)) /
                          (std::log(rows[i].epsilon) - std::log(rows[i - 1].epsilon));
  std::size_t end = rows.size();
  for (std::size_t i = 2; i < rows.size(); ++i) {
    if (rows[i].local_slope < 0.25 * rows[i - 1].local_slope) {
      end = i;
      break;
    }
  }
  res.window = end;
  std::vector<double> xs, ys;
  double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
  for (std::size_t i = 0; i < end; ++i) {
    rows[i].in_window = true;
    xs.push_back(rows[i].epsilon);
    ys.push_back(rows[i].y);
    hmin = std::min(hmin, rows[i].h_norm);
    hmax = std::max(hmax, rows[i].h_norm);
  }
  res.slope = loglog_slope(xs, ys);
  res.h_variation = hmin > 0.0 ? hmax / hmin : std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace hierctl
