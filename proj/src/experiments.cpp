#include "hierctl/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <optional>

#include "hierctl/artifacts.hpp"
#include "hierctl/kernels.hpp"
#include "hierctl/leader.hpp"
#include "hierctl/nash.hpp"
#include "hierctl/outer.hpp"
#include "hierctl/probes.hpp"

namespace hierctl {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"forward", "nash", "leader-sweep", "carleman-probe",
                                              "full"};
  return names;
}

namespace {

// Seed streams of the individual probes.
enum Stream : std::uint64_t { hardy = 1, caccioppoli = 2, observability = 3, convexity = 4 };

class Writer {
 public:
  Writer(fs::path dir, const RunConfig& cfg)
      : dir_(std::move(dir)), hash_(config_hash(cfg)), seed_(cfg.seed) {}

  CsvTable table(std::vector<std::string> columns) const { return {std::move(columns), hash_, seed_}; }

  void csv(const std::string& file, const CsvTable& t) {
    t.write(dir_ / file);
    files_.push_back(dir_ / file);
  }

  void text(const std::string& file, const std::string& content) {
    write_atomic(dir_ / file, content);
    files_.push_back(dir_ / file);
  }

  /// State layout: a t = 0 row with the initial value, then t_{k+1}.
  void state(const std::string& file, const Vector& initial, const SpaceTimeField& slots,
             const Discretization& disc) {
    SpaceTimeField all(slots.slots() + 1, slots.nodes(), slots.name());
    all.slot(0) = initial.transpose();
    for (std::size_t k = 0; k < slots.slots(); ++k) all.slot(k + 1) = slots.slot(k);
    std::vector<double> times;
    for (std::size_t k = 0; k <= slots.slots(); ++k) times.push_back(disc.time.node(k));
    csv(file, field_table(all, disc, times, hash_, seed_));
  }

  /// Control layout: slot k at its midpoint.
  void control(const std::string& file, const SpaceTimeField& f, const Discretization& disc) {
    std::vector<double> times;
    for (std::size_t k = 0; k < f.slots(); ++k) times.push_back(disc.time.midpoint(k));
    csv(file, field_table(f, disc, times, hash_, seed_));
  }

  std::string summary(const std::string& name, json body) {
    body["experiment"] = name;
    body["config_hash"] = hash_;
    body["seed"] = seed_;
    const std::string s = body.dump(2) + "\n";
    text(name + "_summary.json", s);
    return s;
  }

  const std::string& hash() const { return hash_; }
  std::vector<fs::path> files() const { return files_; }

 private:
  fs::path dir_;
  std::string hash_;
  std::uint64_t seed_;
  std::vector<fs::path> files_;
};

double l2(const VectorPair& v, const SpaceGrid& g) {
  return std::sqrt(inner(v[0], v[0], g) + inner(v[1], v[1], g));
}

CsvTable probe_table(const Writer& w, const ProbeReport& rep) {
  CsvTable t = w.table({"trial", "seed", "lhs", "rhs", "ratio", "skipped"});
  for (const auto& tr : rep.trials)
    t.add_row({std::to_string(tr.index), static_cast<std::int64_t>(tr.seed), tr.lhs, tr.rhs,
               tr.ratio, static_cast<std::int64_t>(tr.skipped)});
  t.add_row({std::string("max"), std::int64_t{0}, 0.0, 0.0, rep.worst, std::int64_t{0}});
  t.add_row({std::string("median"), std::int64_t{0}, 0.0, 0.0, rep.median, std::int64_t{0}});
  return t;
}

json probe_json(const ProbeReport& rep) {
  return {{"worst", rep.worst}, {"median", rep.median}, {"best", rep.best},
          {"spread", rep.spread()}, {"accepted", rep.accepted()}, {"trials", rep.trials.size()}};
}

std::string run_forward(const Setup& st, Writer& w) {
  const Problem& pb = st.problem;
  const StateTrajectory y = uncontrolled_trajectory(pb);
  w.state("forward_y1.csv", y.initial[0], y.slots[0], pb.disc);
  w.state("forward_y2.csv", y.initial[1], y.slots[1], pb.disc);
  const double res = nonlinear_residual(pb.disc, y, pb.disc.pair(), pb.dynamics);
  return w.summary("forward", {{"initial_norm", l2(y.initial, pb.disc.space)},
                               {"terminal_norm", l2(y.terminal(), pb.disc.space)},
                               {"space_time_norm", norm(y.slots, pb.disc)},
                               {"residual", res}});
}

std::string run_nash(const Setup& st, Writer& w) {
  const Problem& pb = st.problem;
  const GameContext ctx{pb, std::nullopt, CoupledMethod::monolithic};
  const SpaceTimeField h = pb.disc.field("h");
  const NashSolution nash = solve_nash(ctx, h);
  w.control("nash_v1.csv", nash.v[0], pb.disc);
  w.control("nash_v2.csv", nash.v[1], pb.disc);
  w.state("nash_y1.csv", nash.y.initial[0], nash.y.slots[0], pb.disc);
  w.state("nash_y2.csv", nash.y.initial[1], nash.y.slots[1], pb.disc);

  CsvTable players = w.table({"player", "J", "characterization", "c_hat", "mu", "min_variation_ratio"});
  CsvTable samples = w.table({"player", "sample", "seed", "norm2", "variation", "ratio"});
  json per_player = json::array();
  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const std::uint64_t seed =
        kernels::trial_seed(st.config.seed, Stream::convexity * 16 + ii);
    const ConvexityReport rep = convexity_threshold(ctx, i, nash, st.config.convexity_samples, seed);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < rep.samples.size(); ++s) {
      const auto& smp = rep.samples[s];
      const double ratio = smp.variation / smp.norm2;
      min_ratio = std::min(min_ratio, ratio);
      samples.add_row({static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(s),
                       static_cast<std::int64_t>(smp.seed), smp.norm2, smp.variation, ratio});
    }
    const double J = evaluate_J(ctx, i, h, nash.v);
    players.add_row({static_cast<std::int64_t>(i + 1), J, nash.characterization[ii], rep.c_hat,
                     rep.mu, min_ratio});
    per_player.push_back({{"player", i + 1},
                          {"J", J},
                          {"characterization", nash.characterization[ii]},
                          {"c_hat", rep.c_hat},
                          {"min_variation_ratio", min_ratio}});
  }
  w.csv("nash_players.csv", players);
  w.csv("nash_convexity.csv", samples);
  return w.summary("nash", {{"players", per_player},
                            {"bound_ratio", nash.bound_ratio},
                            {"outer_iterations", nash.outer_iterations}});
}

std::string run_leader_sweep(const Setup& st, Writer& w) {
  const Problem& pb = st.problem;
  const LinearizedCoefficients coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
  const LeaderProblem lp(pb, coeffs);
  const SweepResult sweep = epsilon_sweep(lp, st.config.ladder, st.leader_config());

  CsvTable t = w.table({"epsilon", "y1_T", "y2_T", "y_T", "h_norm", "cg_iterations", "residual",
                        "local_slope", "in_window", "slope"});
  LogLogPlot plot{"terminal state versus penalty", "epsilon", "|y(T)|", {}, {}, {}, sweep.slope,
                  true, w.hash()};
  for (const auto& r : sweep.rows) {
    t.add_row({r.epsilon, r.y1, r.y2, r.y, r.h_norm, static_cast<std::int64_t>(r.iterations),
               r.residual, r.local_slope, static_cast<std::int64_t>(r.in_window), sweep.slope});
    plot.x.push_back(r.epsilon);
    plot.y.push_back(r.y);
    plot.highlighted.push_back(r.in_window);
  }
  w.csv("leader_sweep.csv", t);
  w.text("leader_sweep.svg", render_svg(plot));
  return w.summary("leader-sweep", {{"slope", sweep.slope},
                                    {"h_variation", sweep.h_variation},
                                    {"window", sweep.window},
                                    {"points", sweep.rows.size()}});
}

std::string run_carleman_probe(const Setup& st, Writer& w) {
  const Problem& pb = st.problem;
  const auto& disc = pb.disc;
  const WeightBundle& wb = st.weights;
  const RunConfig& cfg = st.config;

  CsvTable sigma = w.table({"x", "sigma", "sigma_x", "delta", "psi"});
  for (std::size_t j = 0; j < disc.nodes(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    sigma.add_row({disc.space.node(j), st.sigma.values[jj], st.sigma.derivative[jj], wb.delta[jj],
                   wb.psi[jj]});
  }
  w.csv("carleman_sigma.csv", sigma);
  CsvTable time = w.table({"t", "theta", "theta_tilde", "phi_star", "phi_hat", "rho_star", "kappa"});
  for (std::size_t k = 0; k < disc.slots(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    time.add_row({disc.time.midpoint(k), wb.theta[kk], wb.theta_tilde[kk], wb.phi_star[kk],
                  wb.phi_hat[kk], wb.rho_star[kk], wb.kappa[kk]});
  }
  w.csv("carleman_weights.csv", time);

  const SpaceGrid hardy_grid = SpaceGrid::build(cfg.hardy_n, cfg.grading);
  const ProbeReport hardy = probe_hardy(disc.a, hardy_grid, cfg.hardy_trials,
                                        kernels::trial_seed(cfg.seed, Stream::hardy));
  w.csv("probe_hardy.csv", probe_table(w, hardy));

  const LinearizedCoefficients coeffs = freeze_coefficients(pb, uncontrolled_trajectory(pb));
  const CoupledSolver solver(pb, coeffs);
  const ProbeReport cacc =
      probe_caccioppoli(solver, wb, cfg.o_inner, cfg.o1, cfg.probe_trials,
                        kernels::trial_seed(cfg.seed, Stream::caccioppoli));
  w.csv("probe_caccioppoli.csv", probe_table(w, cacc));
  const std::uint64_t obs_seed = kernels::trial_seed(cfg.seed, Stream::observability);
  const ProbeReport obs = probe_observability(solver, wb, cfg.probe_trials, obs_seed);
  w.csv("probe_observability.csv", probe_table(w, obs));

  // Observed growth of the observability constant in s (reported, not judged).
  CsvTable scan = w.table({"s", "worst_ratio"});
  std::vector<double> ss, ratios;
  for (double factor : {0.125, 0.25, 0.5, 1.0}) {
    RunConfig c = cfg;
    c.s = factor * wb.params.s;
    const auto sub = build_setup(c);
    const LinearizedCoefficients cc =
        freeze_coefficients(sub->problem, uncontrolled_trajectory(sub->problem));
    const CoupledSolver sv(sub->problem, cc);
    const ProbeReport rep = probe_observability(sv, sub->weights, cfg.probe_trials, obs_seed);
    scan.add_row({c.s, rep.worst});
    ss.push_back(c.s);
    ratios.push_back(rep.worst);
  }
  w.csv("probe_s_scan.csv", scan);
  const double exponent = loglog_slope(ss, ratios);

  const double bound = 4.0 / ((1.0 - disc.a.alpha()) * (1.0 - disc.a.alpha()));
  return w.summary("carleman-probe",
                   {{"s", wb.params.s},
                    {"r", wb.params.r},
                    {"dbar", wb.params.dbar},
                    {"lambda", wb.params.lambda},
                    {"lambda_range", {wb.params.lambda_range.lo, wb.params.lambda_range.hi}},
                    {"sigma_sup", st.sigma.sup},
                    {"hardy", probe_json(hardy)},
                    {"hardy_bound", bound},
                    {"caccioppoli", probe_json(cacc)},
                    {"observability", probe_json(obs)},
                    {"observability_s_exponent", exponent}});
}

std::string run_full(const Setup& st, Writer& w) {
  const Problem& pb = st.problem;
  const OuterResult r = run_stackelberg_nash(pb, st.outer_config());
  w.state("full_y1.csv", r.trajectory.initial[0], r.trajectory.slots[0], pb.disc);
  w.state("full_y2.csv", r.trajectory.initial[1], r.trajectory.slots[1], pb.disc);
  w.control("full_h.csv", r.h, pb.disc);
  w.control("full_v1.csv", r.v[0], pb.disc);
  w.control("full_v2.csv", r.v[1], pb.disc);
  CsvTable changes = w.table({"iteration", "change"});
  for (std::size_t i = 0; i < r.changes.size(); ++i)
    changes.add_row({static_cast<std::int64_t>(i + 1), r.changes[i]});
  w.csv("full_changes.csv", changes);
  return w.summary("full", {{"iterations", r.iterations},
                            {"converged", r.converged},
                            {"terminal_norms", {r.terminal_norms[0], r.terminal_norms[1]}},
                            {"terminal_norm", r.terminal_norm},
                            {"h_norm", r.leader.h_norm},
                            {"cg_iterations", r.leader.iterations},
                            {"state_residual", r.state_residual},
                            {"adjoint_residual", r.adjoint_residual},
                            {"bound_ratio", r.bound_ratio},
                            {"epsilon", st.config.epsilon}});
}

}  // namespace

ExperimentOutcome run_experiment(const std::string& name, const RunConfig& cfg,
                                 const fs::path& out_dir) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw UsageError("unknown experiment '" + name + "'");
  const auto setup = build_setup(cfg);
  Writer w(out_dir, cfg);
  ExperimentOutcome out;
  if (name == "forward")
    out.summary = run_forward(*setup, w);
  else if (name == "nash")
    out.summary = run_nash(*setup, w);
  else if (name == "leader-sweep")
    out.summary = run_leader_sweep(*setup, w);
  else if (name == "carleman-probe")
    out.summary = run_carleman_probe(*setup, w);
  else
    out.summary = run_full(*setup, w);
  out.artifacts = w.files();
  return out;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    const int c = static_cast<int>(err->error_class());
    return c == 0 ? 1 : c;
  }
  return static_cast<int>(ErrorClass::internal);
}

}  // namespace hierctl
