#include "hierctl/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hierctl/error.hpp"

namespace hierctl {

std::size_t ProbeReport::accepted() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const ProbeTrial& t) { return !t.skipped; }));
}

void summarize(ProbeReport& report) {
  std::vector<double> r;
  for (const auto& t : report.trials)
    if (!t.skipped) r.push_back(t.ratio);
  if (r.empty()) {
    report.worst = report.median = report.best = 0.0;
    return;
  }
  std::sort(r.begin(), r.end());
  report.best = r.front();
  report.worst = r.back();
  const std::size_t h = r.size() / 2;
  report.median = r.size() % 2 ? r[h] : 0.5 * (r[h - 1] + r[h]);
}

ProbeTrial hardy_quotient(const Degeneracy& a, const SpaceGrid& grid, const Vector& z) {
  const std::size_t n = grid.size();
  if (static_cast<std::size_t>(z.size()) != n + 2)
    throw DomainError("hardy: expected values on the extended nodes");
  if (z[0] != 0.0) throw DomainError("hardy: z(0) must vanish");
  ProbeTrial t;
  for (std::size_t i = 1; i <= n + 1; ++i) {
    const double x = grid.extended(i);
    const double w = i <= n ? grid.weight(i - 1) : 0.5 * grid.spacing(n);
    const double zi = z[static_cast<Eigen::Index>(i)];
    t.lhs += a(x) / (x * x) * zi * zi * w;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const double h = grid.spacing(i);
    const double dz = (z[static_cast<Eigen::Index>(i + 1)] - z[static_cast<Eigen::Index>(i)]) / h;
    t.rhs += a(grid.midpoint(i)) * dz * dz * h;
  }
  if (!(t.rhs > 1e-300)) {
    t.skipped = true;
    return t;
  }
  t.ratio = t.lhs / t.rhs;
  return t;
}

ProbeReport probe_hardy(const Degeneracy& a, const SpaceGrid& grid, std::size_t trials,
                        std::uint64_t seed, kernels::Exec exec) {
  ProbeReport report;
  report.trials.resize(trials);
  const std::size_t n = grid.size();
  kernels::for_each_index(
      trials,
      [&](std::size_t t) {
        std::uint64_t s = kernels::trial_seed(seed, t);
        for (int attempt = 0; attempt < 8; ++attempt) {
          std::mt19937_64 rng(s);
          std::normal_distribution<double> normal;
          constexpr int modes = 8;
          std::array<double, modes> c{};
          for (int k = 0; k < modes; ++k) c[static_cast<std::size_t>(k)] = normal(rng) / (k + 1);
          Vector z = Vector::Zero(static_cast<Eigen::Index>(n + 2));
          for (std::size_t i = 1; i <= n + 1; ++i) {
            const double x = grid.extended(i);
            double v = 0.0;
            for (int k = 0; k < modes; ++k)
              v += c[static_cast<std::size_t>(k)] * std::sin((k + 0.5) * std::numbers::pi * x);
            z[static_cast<Eigen::Index>(i)] = v;
          }
          ProbeTrial tr = hardy_quotient(a, grid, z);
          tr.index = t;
          tr.seed = s;
          if (!tr.skipped) {
            report.trials[t] = tr;
            return;
          }
          s = kernels::trial_seed(s, static_cast<std::uint64_t>(attempt) + 1);
        }
        report.trials[t] = ProbeTrial{t, s, 0.0, 0.0, 0.0, true};
      },
      exec);
  summarize(report);
  return report;
}

VectorPair random_terminal(const SpaceGrid& grid, std::uint64_t seed, std::size_t modes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorPair out = zero_vectors(grid.size());
  for (auto& v : out) {
    std::vector<double> c(modes);
    for (std::size_t k = 0; k < modes; ++k) c[k] = normal(rng) / static_cast<double>(k + 1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < modes; ++k)
        s += c[k] * std::sin(static_cast<double>(k + 1) * std::numbers::pi * grid.node(j));
      v[static_cast<Eigen::Index>(j)] = s;
    }
  }
  return out;
}

ProbeTrial caccioppoli_quotient(const CoupledAdjointSolution& sol, const WeightBundle& w,
                                const Discretization& disc, const Interval& inner,
                                const Interval& outer) {
  const Mask in = Mask::from_interval(disc.space, inner.lo, inner.hi);
  const Mask out = Mask::from_interval(disc.space, outer.lo, outer.hi);
  const double s = w.params.s;
  const double dt = disc.time.dt();
  ProbeTrial t;
  for (std::size_t k = 0; k < disc.slots(); ++k) {
    const double th = w.theta[k];
    for (const FieldPair* f : {&sol.rho.slots, &sol.varrho}) {
      for (std::size_t c = 0; c < 2; ++c) {
        const Vector v = (*f)[c].slot(k).transpose();
        const Vector g = gradient(v, disc.space);
        for (std::size_t j = 0; j < disc.nodes(); ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          const double e = std::exp(2.0 * s * w.phi(k, j)) * disc.space.weight(j) * dt;
          if (in.contains(j)) t.lhs += g[jj] * g[jj] * e;
          if (out.contains(j)) t.rhs += s * s * th * th * v[jj] * v[jj] * e;
        }
      }
    }
  }
  if (!(t.rhs > 0.0)) {
    t.skipped = true;
    return t;
  }
  t.ratio = t.lhs / t.rhs;
  return t;
}

ProbeReport probe_caccioppoli(const CoupledSolver& solver, const WeightBundle& w,
                              const Interval& inner, const Interval& outer, std::size_t trials,
                              std::uint64_t seed) {
  if (!inner.compactly_inside(outer))
    throw DomainError("caccioppoli: inner set must be compactly contained in the outer set");
  const auto& disc = solver.problem().disc;
  ProbeReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = kernels::trial_seed(seed, t);
    const auto sol = solver.adjoint(random_terminal(disc.space, s));
    ProbeTrial tr = caccioppoli_quotient(sol, w, disc, inner, outer);
    tr.index = t;
    tr.seed = s;
    if (!std::isfinite(tr.ratio)) throw NumericError("caccioppoli: non-finite quotient");
    report.trials.push_back(tr);
  }
  summarize(report);
  return report;
}

ProbeTrial observability_quotient(const CoupledAdjointSolution& sol, const WeightBundle& w,
                                  const Problem& pb) {
  const auto& disc = pb.disc;
  ProbeTrial t;
  const VectorPair r0 = sol.rho.initial();
  t.lhs = inner(r0[0], r0[0], disc.space) + inner(r0[1], r0[1], disc.space);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      SpaceTimeField weighted = sol.psi[i].slots[c];
      for (std::size_t k = 0; k < disc.slots(); ++k) weighted.slot(k) *= w.kappa[k];
      t.lhs += inner(weighted, weighted, disc);
    }
  }
  t.rhs = masked_inner(sol.rho.slots[0], sol.rho.slots[0], pb.masks.leader, disc);
  if (!(t.rhs > 0.0)) {
    t.skipped = true;
    return t;
  }
  t.ratio = t.lhs / t.rhs;
  return t;
}

ProbeReport probe_observability(const CoupledSolver& solver, const WeightBundle& w,
                                std::size_t trials, std::uint64_t seed) {
  const auto& pb = solver.problem();
  ProbeReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = kernels::trial_seed(seed, t);
    const auto sol = solver.adjoint(random_terminal(pb.disc.space, s));
    ProbeTrial tr = observability_quotient(sol, w, pb);
    tr.index = t;
    tr.seed = s;
    if (!std::isfinite(tr.ratio)) throw NumericError("observability: non-finite quotient");
    report.trials.push_back(tr);
  }
  summarize(report);
  return report;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two points");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace hierctl
