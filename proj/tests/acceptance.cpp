// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Pass a criterion number (or several) to run a subset.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hierctl/artifacts.hpp"
#include "hierctl/carleman.hpp"
#include "hierctl/error.hpp"
#include "hierctl/leader.hpp"
#include "hierctl/nash.hpp"
#include "hierctl/outer.hpp"
#include "hierctl/pde.hpp"
#include "hierctl/probes.hpp"

using namespace hierctl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Forward/backward duality on random data.
Verdict adjoint_identity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int count = 0;
  for (double alpha : {0.0, 0.5, 0.9}) {
    const Discretization disc(SpaceGrid::build(40), TimeGrid(1.0, 40), Degeneracy(alpha));
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(alpha * 10));
    for (int trial = 0; trial < 20; ++trial) {
      const auto coeffs = fixtures::random_coefficients(disc, rng);
      const auto y0 = fixtures::random_vectors(disc.nodes(), rng);
      const auto f = fixtures::random_pair(disc, rng);
      const auto pT = fixtures::random_vectors(disc.nodes(), rng);
      const auto g = fixtures::random_pair(disc, rng);
      worst = std::max(worst, duality_pairing(disc, y0, f, pT, g, coeffs.state()).relative_gap());
      ++count;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0,
          fmt::format("worst relative gap {:.2e} over {} data sets (tol 1e-10), {:.2f} s (limit 10 s)",
                      worst, count, secs)};
}

// 2. Follower and leader gradients against central differences, linear dynamics.
Verdict gradient_checks() {
  const auto t0 = Clock::now();
  const auto st = fixtures::small_setup(30, 30, "linear");
  const Problem& pb = st->problem;
  const auto coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
  const GameContext ctx{pb, coeffs, CoupledMethod::monolithic};
  std::mt19937_64 rng(2024);
  const double delta = 1e-5;
  const auto h = fixtures::random_field(pb.disc, rng, &pb.masks.leader);
  FollowerPair v{fixtures::random_field(pb.disc, rng, &pb.masks.follower1),
                 fixtures::random_field(pb.disc, rng, &pb.masks.follower2)};
  double follower_worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const SpaceTimeField g = gradient_J(ctx, i, h, v);
    for (int r = 0; r < 10; ++r) {
      const auto w = fixtures::random_field(pb.disc, rng, &pb.masks.follower(i));
      FollowerPair plus = v, minus = v;
      plus[ii] += delta * w;
      minus[ii] -= delta * w;
      const double fd = (evaluate_J(ctx, i, h, plus) - evaluate_J(ctx, i, h, minus)) / (2 * delta);
      follower_worst = std::max(follower_worst, fixtures::relative(fd, inner(g, w, pb.disc)));
    }
  }
  const LeaderProblem lp(pb, coeffs);
  double leader_worst = 0.0;
  for (double eps : {1e-2, 1e-4}) {
    const SpaceTimeField g = lp.gradient(h, eps);
    for (int r = 0; r < 10; ++r) {
      const auto w = fixtures::random_field(pb.disc, rng, &pb.masks.leader);
      const double fd = (lp.evaluate(h + delta * w, eps) - lp.evaluate(h - delta * w, eps)) / (2 * delta);
      leader_worst = std::max(leader_worst, fixtures::relative(fd, inner(g, w, pb.disc)));
    }
  }
  const double secs = seconds_since(t0);
  return {follower_worst <= 1e-5 && leader_worst <= 1e-5 && secs < 60.0,
          fmt::format("follower {:.2e} (20 directions), leader {:.2e} (20 directions), tol 1e-5, "
                      "{:.1f} s (limit 60 s)",
                      follower_worst, leader_worst, secs)};
}

double relative_difference(const OptimalitySolution& a, const OptimalitySolution& b,
                           const Discretization& disc) {
  double num = 0.0, den = 0.0;
  auto acc = [&](const FieldPair& x, const FieldPair& y) {
    const double d = norm(FieldPair{x[0] - y[0], x[1] - y[1]}, disc);
    num += d * d;
    den += norm(x, disc) * norm(x, disc);
  };
  acc(a.y.slots, b.y.slots);
  acc(a.p[0].slots, b.p[0].slots);
  acc(a.p[1].slots, b.p[1].slots);
  return std::sqrt(num / den);
}

// 3. Characterization of the equilibrium; monolithic against Picard.
Verdict nash_characterization() {
  const auto st = fixtures::small_setup(30, 30);
  const Problem& pb = st->problem;
  std::mt19937_64 rng(33);
  const auto h = fixtures::random_field(pb.disc, rng, &pb.masks.leader);
  const GameContext nonlinear{pb, std::nullopt, CoupledMethod::monolithic};
  const NashSolution nash = solve_nash(nonlinear, h);
  const double charac = std::max(nash.characterization[0], nash.characterization[1]);

  const auto coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
  const auto mono = CoupledSolver(pb, coeffs, CoupledMethod::monolithic).optimality(OptimalityData::of(pb, h));
  const auto pic = CoupledSolver(pb, coeffs, CoupledMethod::picard).optimality(OptimalityData::of(pb, h));
  const double diff = relative_difference(mono, pic, pb.disc);
  return {charac <= 1e-6 && diff <= 1e-8,
          fmt::format("characterization {:.2e} (tol 1e-6), monolithic vs Picard {:.2e} (tol 1e-8, "
                      "{} Picard sweeps), 30x30",
                      charac, diff, pic.history.size())};
}

// 4. Convexity threshold independent of mu.
Verdict convexity() {
  const auto t0 = Clock::now();
  constexpr std::size_t samples = 50;
  double worst_change = 0.0, worst_margin = std::numeric_limits<double>::infinity();
  std::string detail;
  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    std::array<ConvexityReport, 2> reps;
    for (std::size_t s = 0; s < 2; ++s) {
      RunConfig cfg;
      if (s == 1) cfg.mu[ii] *= 10.0;
      const auto st = build_setup(cfg);
      const GameContext ctx{st->problem, std::nullopt, CoupledMethod::monolithic};
      const NashSolution nash = solve_nash(ctx, st->problem.disc.field());
      reps[s] = convexity_threshold(ctx, i, nash, samples, 4242 + ii);
    }
    // Every sample at 10 mu must respect the threshold estimated at mu, and vice versa.
    for (std::size_t s = 0; s < 2; ++s) {
      const double c_other = reps[1 - s].c_hat;
      for (const auto& smp : reps[s].samples) {
        const double margin = smp.variation - (reps[s].mu - c_other) * smp.norm2;
        worst_margin = std::min(worst_margin, margin / (smp.norm2 * reps[s].mu));
      }
      for (const auto& smp : reps[s].samples)
        worst_margin = std::min(worst_margin,
                                (smp.variation - (reps[s].mu - reps[s].c_hat) * smp.norm2) /
                                    (smp.norm2 * reps[s].mu));
    }
    const double change = std::abs(reps[1].c_hat - reps[0].c_hat) / std::abs(reps[0].c_hat);
    worst_change = std::max(worst_change, change);
    detail += fmt::format("player {}: C={:.4e} at mu, {:.4e} at 10 mu (change {:.1f}%); ", i + 1,
                          reps[0].c_hat, reps[1].c_hat, 100 * change);
  }
  // The sample that defines C has zero margin up to rounding, hence the tolerance relative to mu.
  return {worst_change < 0.25 && worst_margin >= -1e-12,
          detail + fmt::format("min margin/mu {:.2e}, {} samples each, {:.1f} s", worst_margin, samples,
                               seconds_since(t0))};
}

// 5. sqrt(eps) decay of the terminal state and bounded leader controls.
Verdict penalized_null_control() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  const auto st = build_setup(cfg);
  const Problem& pb = st->problem;
  const auto coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
  const LeaderProblem lp(pb, coeffs);
  const SweepResult sw = epsilon_sweep(lp, {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, st->leader_config());
  const double secs = seconds_since(t0);
  std::string rows;
  for (const auto& r : sw.rows) rows += fmt::format(" {:.0e}:{:.3e}/{:.3e}", r.epsilon, r.y, r.h_norm);
  const bool slope_ok = std::abs(sw.slope - 0.5) <= 0.15;
  const bool h_ok = sw.h_variation < 2.0;
  return {slope_ok && h_ok && secs < 300.0,
          fmt::format("slope {:.4f} (0.5 +- 0.15: {}), |h| variation {:.3f}x (< 2: {}), window {} "
                      "points, {:.0f} s (limit 300 s); eps:|y(T)|/|h|{}",
                      sw.slope, slope_ok ? "ok" : "no", sw.h_variation, h_ok ? "ok" : "no",
                      sw.window, secs, rows)};
}

// Pointwise check of every weight inequality, computed here independently of build_weights.
double weight_violation(const WeightBundle& w) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.phi.slots(); ++k)
    for (std::size_t j = 0; j < w.phi.nodes(); ++j) {
      const double phi = w.phi(k, j), Phi = w.Phi(k, j);
      const double scale = std::abs(phi) + std::abs(Phi);
      worst = std::max({worst, ((4.0 / 3.0) * Phi - phi) / scale, (phi - Phi) / scale,
                        (2 * Phi - phi) / scale, (4 * Phi - 3 * phi) / scale});
    }
  for (Eigen::Index j = 0; j < w.delta.size(); ++j) worst = std::max(worst, w.delta[j] >= 0 ? 1.0 : -1.0);
  for (Eigen::Index k = 0; k < w.kappa.size(); ++k)
    if (!(w.kappa[k] > 0.0 && w.kappa[k] < 1.0)) worst = std::max(worst, 1.0);
  return worst;
}

// 6. Weight invariants, including the worked parameter instance.
Verdict weight_invariants() {
  const auto t0 = Clock::now();
  const CarlemanParams worked = choose_parameters(0.5, 1.0);
  const bool interval_ok = std::abs(worked.lambda_range.lo - 95.625) < 1e-9 &&
                           std::abs(worked.lambda_range.hi - 96.0) < 1e-9;
  double worst = -std::numeric_limits<double>::infinity();
  int bundles = 0;
  for (double alpha : {0.0, 0.5, 0.9}) {
    for (double sup : {0.0, 1.0}) {
      const Discretization disc(SpaceGrid::build(100), TimeGrid(1.0, 200), Degeneracy(alpha));
      const SigmaProfile sigma = build_sigma(disc.space, {0.35, 0.40}, sup);
      CarlemanParams p = choose_parameters(disc.a, sigma);
      p.s = calibrate_s(p, disc.time, disc.space);
      worst = std::max(worst, weight_violation(build_weights(p, disc, sigma)));
      ++bundles;
    }
  }
  const double secs = seconds_since(t0);
  // Inequalities hold up to a relative slack of 1e-12 for rounding.
  return {interval_ok && worst <= 1e-12 && secs < 1.0,
          fmt::format("worked interval [{:.6g}, {:.6g}] (expected [95.625, 96]), largest scaled "
                      "violation {:.2e} over {} bundles, {:.2f} s (limit 1 s)",
                      worked.lambda_range.lo, worked.lambda_range.hi, worst, bundles, secs)};
}

// 7. Hardy-Poincare probe.
Verdict hardy() {
  const auto t0 = Clock::now();
  const SpaceGrid grid = SpaceGrid::build(400);
  bool ok = true;
  std::string detail;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const ProbeReport rep = probe_hardy(Degeneracy(alpha), grid, 200, 7 + static_cast<std::uint64_t>(alpha * 100));
    const double bound = 4.0 / ((1 - alpha) * (1 - alpha));
    ok = ok && rep.worst <= 1.1 * bound && rep.accepted() == 200;
    detail += fmt::format("alpha {}: worst {:.4f} vs {:.4f}; ", alpha, rep.worst, 1.1 * bound);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 30.0, detail + fmt::format("{:.2f} s (limit 30 s)", secs)};
}

// 8. Observability ratio finite and stable under refinement.
Verdict observability() {
  const auto t0 = Clock::now();
  std::array<double, 2> worst{};
  bool finite = true;
  std::size_t idx = 0;
  for (std::size_t n : {50, 100}) {
    RunConfig cfg;
    cfg.n = n;
    const auto st = build_setup(cfg);
    const Problem& pb = st->problem;
    const auto coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
    const CoupledSolver solver(pb, coeffs);
    const ProbeReport rep = probe_observability(solver, st->weights, 20, 808);
    for (const auto& t : rep.trials) finite = finite && !t.skipped && std::isfinite(t.ratio);
    worst[idx++] = rep.worst;
  }
  const double spread = std::max(worst[0], worst[1]) / std::min(worst[0], worst[1]);
  return {finite && spread < 3.0,
          fmt::format("max ratio {:.4e} at n=50, {:.4e} at n=100, spread {:.3f} (< 3), all 20 "
                      "trials finite: {}, {:.1f} s",
                      worst[0], worst[1], spread, finite ? "yes" : "no", seconds_since(t0))};
}

// 9. Nonlinear fixed point.
Verdict fixed_point() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.lipschitz = 0.1;
  const auto st = build_setup(cfg);
  OuterConfig oc = st->outer_config();
  oc.damping = 1.0;
  oc.max_iter = 10;
  oc.tol = 1e-8;
  try {
    const OuterResult r = run_stackelberg_nash(st->problem, oc);
    std::string log;
    for (double c : r.changes) log += fmt::format(" {:.2e}", c);
    const double residual = std::max(r.state_residual, r.adjoint_residual);
    return {r.converged && residual <= 1e-7,
            fmt::format("{} iterations (damping 1), changes{}, nonlinear residual {:.2e} (tol 1e-7), "
                        "|y(T)| {:.3e}, {:.1f} s",
                        r.iterations, log, residual, r.terminal_norm, seconds_since(t0))};
  } catch (const IterationError& e) {
    std::string log;
    for (double c : e.history()) log += fmt::format(" {:.2e}", c);
    return {false, std::string("no convergence within 10 iterations, changes") + log};
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Byte-identical artifacts for identical config and seed.
Verdict determinism() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / fmt::format("hierctl_accept_{}", ::getpid());
  fs::create_directories(root);
  const fs::path config = root / "run.ini";
  {
    std::ofstream out(config);
    out << "[grid]\nn = 40\nm = 60\n\n[probe]\ntrials = 5\nhardy_trials = 20\nhardy_n = 100\n"
           "convexity_samples = 5\n\n[run]\nseed = 99\n";
  }
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  bool ran = true;
  for (const char* exp : {"full", "carleman-probe"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const std::string cmd = fmt::format("\"{}\" {} --config \"{}\" --out \"{}\" --quiet 2>/dev/null",
                                          HIERCTL_BINARY, exp, config.string(),
                                          (root / fmt::format("run{}", rep)).string());
      ran = ran && std::system(cmd.c_str()) == 0;
    }
  }
  if (ran) {
    for (const auto& entry : fs::directory_iterator(root / "run0")) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path other = root / "run1" / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
        mismatched.push_back(entry.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string bad;
  for (const auto& m : mismatched) bad += " " + m;
  return {ran && compared > 0 && mismatched.empty(),
          fmt::format("{} CSV files compared across two runs of full and carleman-probe, {} "
                      "differ{}, runs succeeded: {}, {:.1f} s",
                      compared, mismatched.size(), bad, ran ? "yes" : "no", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"adjoint identity", adjoint_identity},
      {"gradient checks", gradient_checks},
      {"nash characterization", nash_characterization},
      {"convexity threshold", convexity},
      {"penalized null control", penalized_null_control},
      {"weight invariants", weight_invariants},
      {"hardy-poincare probe", hardy},
      {"observability probe", observability},
      {"nonlinear fixed point", fixed_point},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
