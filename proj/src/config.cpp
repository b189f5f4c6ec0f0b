#include "hierctl/config.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "hierctl/error.hpp"
#include "hierctl/nash.hpp"

namespace hierctl {

namespace {

bool open_unit(const Interval& i) { return i.lo > 0.0 && i.hi < 1.0 && i.lo < i.hi; }
bool overlap(const Interval& a, const Interval& b) { return a.lo < b.hi && b.lo < a.hi; }

std::string show(const Interval& i) { return fmt::format("({:g}, {:g})", i.lo, i.hi); }

}  // namespace

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> v;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  need(c.n >= 3, "n: need at least 3 interior nodes");
  need(c.m >= 1, "m: need at least one time step");
  need(c.horizon > 0.0, "T: must be positive");
  need(c.alpha >= 0.0 && c.alpha < 1.0, "alpha: must lie in [0,1)");
  need(c.grading >= 1.0, "grading: must be at least 1");

  const std::array<std::pair<const char*, const Interval*>, 9> sets{{{"omega", &c.omega},
                                                                     {"omega1", &c.omega1},
                                                                     {"omega2", &c.omega2},
                                                                     {"omega_d", &c.omega_d},
                                                                     {"o0", &c.o0},
                                                                     {"o1", &c.o1},
                                                                     {"o2", &c.o2},
                                                                     {"o3", &c.o3},
                                                                     {"o_inner", &c.o_inner}}};
  bool intervals_ok = true;
  for (const auto& [name, iv] : sets) {
    if (!open_unit(*iv)) {
      v.push_back(fmt::format("{}: {} must satisfy 0 < lo < hi < 1", name, show(*iv)));
      intervals_ok = false;
    }
  }
  if (intervals_ok) {
    need(!overlap(c.omega1, c.omega), "omega1, omega: follower set " + show(c.omega1) +
                                          " overlaps leader set " + show(c.omega));
    need(!overlap(c.omega2, c.omega), "omega2, omega: follower set " + show(c.omega2) +
                                          " overlaps leader set " + show(c.omega));
    if (!overlap(c.omega_d, c.omega)) {
      v.push_back("omega_d, omega: the observation set must intersect the leader set");
    } else {
      const Interval common{std::max(c.omega_d.lo, c.omega.lo), std::min(c.omega_d.hi, c.omega.hi)};
      need(c.o1.compactly_inside(common), "o1: must lie compactly inside omega_d ∩ omega = " + show(common));
      need(c.o3.compactly_inside(common), "o3: must lie compactly inside omega_d ∩ omega = " + show(common));
    }
    need(c.o0.compactly_inside(c.o1), "o0: must lie compactly inside o1");
    need(c.o1.compactly_inside(c.o2), "o1: must lie compactly inside o2");
    need(c.o2.compactly_inside(c.o3), "o2: must lie compactly inside o3");
    need(c.o0.compactly_inside(c.o_inner) && c.o_inner.compactly_inside(c.o1),
         "o_inner: must satisfy o0 ⋐ o_inner ⋐ o1");
  }

  for (std::size_t i = 0; i < 2; ++i) {
    need(c.cost_alpha[i] > 0.0, fmt::format("alpha{}: must be positive", i + 1));
    need(c.mu[i] > 0.0, fmt::format("mu{}: must be positive", i + 1));
    need(std::isfinite(c.target_amplitude[i]), fmt::format("target{}: must be finite", i + 1));
  }
  need(c.d0 > 0.0, "d0: must be positive");
  for (const auto& [name, kind] : {std::pair{"f1", &c.f1}, std::pair{"f2", &c.f2}}) {
    need(*kind == "zero" || *kind == "linear" || *kind == "tanh" || *kind == "sine",
         std::string(name) + ": unknown nonlinearity '" + *kind + "'");
  }
  need(c.lipschitz >= 0.0, "M: must be non-negative");
  need(std::isfinite(c.y0_amplitude), "y0_amplitude: must be finite");
  need(c.weight_range > 1.0, "weight_range: must exceed 1");
  need(c.epsilon > 0.0, "epsilon: must be positive");
  bool ladder_ok = c.ladder.size() >= 4;
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    ladder_ok = ladder_ok && c.ladder[i] > 0.0;
    if (i > 0) ladder_ok = ladder_ok && c.ladder[i] < c.ladder[i - 1];
  }
  need(ladder_ok, "ladder: need at least 4 positive, strictly decreasing values");
  need(c.cg_tol > 0.0 && c.cg_tol < 1.0, "cg_tol: must lie in (0,1)");
  need(c.cg_max_iter >= 1, "cg_max_iter: must be at least 1");
  need(c.outer_max_iter >= 1, "outer_max_iter: must be at least 1");
  need(c.outer_tol > 0.0, "outer_tol: must be positive");
  need(c.damping > 0.0 && c.damping <= 1.0, "damping: must lie in (0,1]");
  need(c.probe_trials >= 1, "probe_trials: must be at least 1");
  need(c.hardy_trials >= 1, "hardy_trials: must be at least 1");
  need(c.hardy_n >= 3, "hardy_n: need at least 3 nodes");
  need(c.convexity_samples >= 1, "convexity_samples: must be at least 1");
  need(!c.out_dir.empty(), "out_dir: must not be empty");
  return v;
}

namespace {

namespace pt = boost::property_tree;

/// Line number of every "section.key" in the raw text.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  for (int no = 1; std::getline(in, line); ++no) {
    boost::algorithm::trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = boost::algorithm::trim_copy(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = boost::algorithm::trim_copy(line.substr(0, eq));
    lines[section.empty() ? key : section + "." + key] = no;
  }
  return lines;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

std::uint64_t to_unsigned(const std::string& s) {
  if (s.empty() || s[0] == '-') throw std::invalid_argument("not a non-negative integer");
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

Interval to_interval(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 2) throw std::invalid_argument("expected 'lo, hi'");
  return {to_double(parts[0]), to_double(parts[1])};
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size = [](std::size_t RunConfig::*f) {
      return [f](RunConfig& c, const std::string& s) { c.*f = to_unsigned(s); };
    };
    auto real = [](double RunConfig::*f) {
      return [f](RunConfig& c, const std::string& s) { c.*f = to_double(s); };
    };
    auto integer = [](int RunConfig::*f) {
      return [f](RunConfig& c, const std::string& s) {
        c.*f = static_cast<int>(to_unsigned(s));
      };
    };
    auto interval = [](Interval RunConfig::*f) {
      return [f](RunConfig& c, const std::string& s) { c.*f = to_interval(s); };
    };
    auto text = [](std::string RunConfig::*f) {
      return [f](RunConfig& c, const std::string& s) { c.*f = s; };
    };
    t["grid.n"] = size(&RunConfig::n);
    t["grid.m"] = size(&RunConfig::m);
    t["grid.T"] = real(&RunConfig::horizon);
    t["grid.alpha"] = real(&RunConfig::alpha);
    t["grid.grading"] = real(&RunConfig::grading);
    t["domains.omega"] = interval(&RunConfig::omega);
    t["domains.omega1"] = interval(&RunConfig::omega1);
    t["domains.omega2"] = interval(&RunConfig::omega2);
    t["domains.omega_d"] = interval(&RunConfig::omega_d);
    t["domains.o0"] = interval(&RunConfig::o0);
    t["domains.o1"] = interval(&RunConfig::o1);
    t["domains.o2"] = interval(&RunConfig::o2);
    t["domains.o3"] = interval(&RunConfig::o3);
    t["domains.o_inner"] = interval(&RunConfig::o_inner);
    t["cost.alpha1"] = [](RunConfig& c, const std::string& s) { c.cost_alpha[0] = to_double(s); };
    t["cost.alpha2"] = [](RunConfig& c, const std::string& s) { c.cost_alpha[1] = to_double(s); };
    t["cost.mu1"] = [](RunConfig& c, const std::string& s) { c.mu[0] = to_double(s); };
    t["cost.mu2"] = [](RunConfig& c, const std::string& s) { c.mu[1] = to_double(s); };
    t["cost.target1"] = [](RunConfig& c, const std::string& s) {
      c.target_amplitude[0] = to_double(s);
    };
    t["cost.target2"] = [](RunConfig& c, const std::string& s) {
      c.target_amplitude[1] = to_double(s);
    };
    t["cost.d0"] = real(&RunConfig::d0);
    t["dynamics.f1"] = text(&RunConfig::f1);
    t["dynamics.f2"] = text(&RunConfig::f2);
    t["dynamics.M"] = real(&RunConfig::lipschitz);
    t["dynamics.y0_amplitude"] = real(&RunConfig::y0_amplitude);
    t["carleman.s"] = [](RunConfig& c, const std::string& s) {
      c.s = s == "auto" ? 0.0 : to_double(s);
    };
    t["carleman.weight_range"] = real(&RunConfig::weight_range);
    t["leader.epsilon"] = real(&RunConfig::epsilon);
    t["leader.ladder"] = [](RunConfig& c, const std::string& s) {
      c.ladder.clear();
      for (const auto& p : split_list(s)) c.ladder.push_back(to_double(p));
    };
    t["leader.cg_tol"] = real(&RunConfig::cg_tol);
    t["leader.cg_max_iter"] = integer(&RunConfig::cg_max_iter);
    t["outer.max_iter"] = integer(&RunConfig::outer_max_iter);
    t["outer.tol"] = real(&RunConfig::outer_tol);
    t["outer.damping"] = real(&RunConfig::damping);
    t["probe.trials"] = size(&RunConfig::probe_trials);
    t["probe.hardy_trials"] = size(&RunConfig::hardy_trials);
    t["probe.hardy_n"] = size(&RunConfig::hardy_n);
    t["probe.convexity_samples"] = size(&RunConfig::convexity_samples);
    t["run.seed"] = [](RunConfig& c, const std::string& s) { c.seed = to_unsigned(s); };
    t["run.out_dir"] = text(&RunConfig::out_dir);
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  const auto lines = key_lines(text);
  RunConfig cfg;
  std::vector<std::string> errors;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      const int no = lines.count(section) ? lines.at(section) : 0;
      errors.push_back(fmt::format("{}:{}: {}: key outside any section", origin, no, section));
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const int no = lines.count(full) ? lines.at(full) : 0;
      const auto it = setters().find(full);
      if (it == setters().end()) {
        errors.push_back(fmt::format("{}:{}: {}: unknown key", origin, no, full));
        continue;
      }
      try {
        it->second(cfg, boost::algorithm::trim_copy(node.data()));
      } catch (const std::exception& e) {
        errors.push_back(
            fmt::format("{}:{}: {}: bad value '{}' ({})", origin, no, full, node.data(), e.what()));
      }
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  auto violations = validate(cfg);
  if (!violations.empty()) throw ConfigError(violations);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string canonical_text(const RunConfig& c) {
  std::string out;
  auto put = [&](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  auto real = [](double x) { return fmt::format("{:.17g}", x); };
  auto iv = [&](const Interval& i) { return real(i.lo) + "," + real(i.hi); };
  put("grid.n", std::to_string(c.n));
  put("grid.m", std::to_string(c.m));
  put("grid.T", real(c.horizon));
  put("grid.alpha", real(c.alpha));
  put("grid.grading", real(c.grading));
  put("domains.omega", iv(c.omega));
  put("domains.omega1", iv(c.omega1));
  put("domains.omega2", iv(c.omega2));
  put("domains.omega_d", iv(c.omega_d));
  put("domains.o0", iv(c.o0));
  put("domains.o1", iv(c.o1));
  put("domains.o2", iv(c.o2));
  put("domains.o3", iv(c.o3));
  put("domains.o_inner", iv(c.o_inner));
  put("cost.alpha", real(c.cost_alpha[0]) + "," + real(c.cost_alpha[1]));
  put("cost.mu", real(c.mu[0]) + "," + real(c.mu[1]));
  put("cost.target", real(c.target_amplitude[0]) + "," + real(c.target_amplitude[1]));
  put("cost.d0", real(c.d0));
  put("dynamics.f1", c.f1);
  put("dynamics.f2", c.f2);
  put("dynamics.M", real(c.lipschitz));
  put("dynamics.y0_amplitude", real(c.y0_amplitude));
  put("carleman.s", real(c.s));
  put("carleman.weight_range", real(c.weight_range));
  put("leader.epsilon", real(c.epsilon));
  std::string ladder;
  for (double e : c.ladder) ladder += (ladder.empty() ? "" : ",") + real(e);
  put("leader.ladder", ladder);
  put("leader.cg_tol", real(c.cg_tol));
  put("leader.cg_max_iter", std::to_string(c.cg_max_iter));
  put("outer.max_iter", std::to_string(c.outer_max_iter));
  put("outer.tol", real(c.outer_tol));
  put("outer.damping", real(c.damping));
  put("probe.trials", std::to_string(c.probe_trials));
  put("probe.hardy_trials", std::to_string(c.hardy_trials));
  put("probe.hardy_n", std::to_string(c.hardy_n));
  put("probe.convexity_samples", std::to_string(c.convexity_samples));
  // The seed and output directory are not part of the hash: artifacts carry the seed separately
  // and must not depend on where they are written.
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = canonical_text(cfg);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorClass::internal, "config_hash: SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

OuterConfig Setup::outer_config() const {
  OuterConfig o;
  o.max_iter = config.outer_max_iter;
  o.tol = config.outer_tol;
  o.damping = config.damping;
  o.leader = leader_config();
  return o;
}

PenalizationConfig Setup::leader_config() const {
  PenalizationConfig p;
  p.epsilon = config.epsilon;
  p.tol = config.cg_tol;
  p.max_iter = config.cg_max_iter;
  return p;
}

std::unique_ptr<Setup> build_setup(const RunConfig& cfg) {
  const auto violations = validate(cfg);
  if (!violations.empty()) throw ConfigError(violations);
  Discretization disc(SpaceGrid::build(cfg.n, cfg.grading), TimeGrid(cfg.horizon, cfg.m),
                      Degeneracy(cfg.alpha));
  const auto& space = disc.space;

  ControlGeometry masks{Mask::from_interval(space, cfg.omega.lo, cfg.omega.hi, "omega"),
                        Mask::from_interval(space, cfg.omega1.lo, cfg.omega1.hi, "omega1"),
                        Mask::from_interval(space, cfg.omega2.lo, cfg.omega2.hi, "omega2"),
                        Mask::from_interval(space, cfg.omega_d.lo, cfg.omega_d.hi, "omega_d")};
  std::vector<std::string> empty;
  for (const Mask* m : {&masks.leader, &masks.follower1, &masks.follower2, &masks.observation})
    if (m->count() == 0) empty.push_back(m->name() + ": contains no grid node at n = " + std::to_string(cfg.n));
  if (masks.observation.disjoint(masks.leader))
    empty.push_back("omega_d, omega: no common grid node at n = " + std::to_string(cfg.n));
  if (!empty.empty()) throw ConfigError(empty);

  SigmaProfile sigma = build_sigma(space, cfg.o0);
  CarlemanParams params = choose_parameters(disc.a, sigma, 1.0);
  params.s = cfg.s > 0.0 ? cfg.s : calibrate_s(params, disc.time, space, cfg.weight_range);
  WeightBundle weights = build_weights(params, disc, sigma);

  CostConfig cost;
  cost.alpha = cfg.cost_alpha;
  cost.mu = cfg.mu;
  cost.rho_star = weights.rho_star;
  cost.follower_weight = weights.follower_weight;
  for (std::size_t i = 0; i < 2; ++i) {
    const double freq = static_cast<double>(i + 1) * std::numbers::pi;
    for (std::size_t c = 0; c < 2; ++c) {
      SpaceTimeField t = disc.field(fmt::format("target{}_{}", i + 1, c + 1));
      for (std::size_t k = 0; k < disc.slots(); ++k)
        for (std::size_t j = 0; j < disc.nodes(); ++j)
          t(k, j) = cfg.target_amplitude[i] * weights.kappa[static_cast<Eigen::Index>(k)] *
                    std::sin(freq * space.node(j));
      cost.targets[i][c] = std::move(t);
    }
  }

  VectorPair y0 = zero_vectors(disc.nodes());
  for (std::size_t j = 0; j < disc.nodes(); ++j) {
    const double x = space.node(j);
    y0[0][static_cast<Eigen::Index>(j)] = cfg.y0_amplitude * std::sin(std::numbers::pi * x);
    y0[1][static_cast<Eigen::Index>(j)] = cfg.y0_amplitude * 4.0 * x * (1.0 - x) * (1.0 - x);
  }

  SpaceTimeField d = disc.field("d");
  d.values().setConstant(cfg.d0);
  NonlinearDynamics dyn{Nonlinearity::parse(cfg.f1, cfg.lipschitz),
                        Nonlinearity::parse(cfg.f2, cfg.lipschitz), std::move(d)};

  Problem pb{std::move(disc), std::move(masks), std::move(cost), std::move(y0), std::move(dyn)};
  return std::unique_ptr<Setup>(
      new Setup{cfg, std::move(pb), std::move(sigma), params, std::move(weights)});
}

LinearizedCoefficients zero_state_coefficients(const Problem& pb) {
  StateTrajectory w;
  w.initial = zero_vectors(pb.disc.nodes());
  w.slots = pb.disc.pair();
  return derivative_coefficients(pb, w);
}

}  // namespace hierctl
