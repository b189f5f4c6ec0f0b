#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hierctl/carleman.hpp"
#include "hierctl/outer.hpp"
#include "hierctl/pde.hpp"

namespace hierctl {

struct RunConfig {
  // [grid]
  std::size_t n = 100;
  std::size_t m = 200;
  double horizon = 1.0;
  double alpha = 0.5;
  double grading = 1.0;

  // [domains]
  Interval omega{0.2, 0.45};
  Interval omega1{0.6, 0.7};
  Interval omega2{0.75, 0.85};
  Interval omega_d{0.3, 0.6};
  Interval o0{0.35, 0.40};
  Interval o1{0.33, 0.42};
  Interval o2{0.32, 0.43};
  Interval o3{0.31, 0.44};
  /// Inner set of the Caccioppoli probe, between O0 and O1.
  Interval o_inner{0.34, 0.41};

  // [cost]
  std::array<double, 2> cost_alpha{1.0, 1.0};
  std::array<double, 2> mu{100.0, 100.0};
  std::array<double, 2> target_amplitude{1.0, 0.5};
  double d0 = 1.0;

  // [dynamics]
  std::string f1 = "tanh";
  std::string f2 = "tanh";
  double lipschitz = 0.1;
  double y0_amplitude = 1.0;

  // [carleman]
  /// s <= 0 selects the calibrated value.
  double s = 0.0;
  double weight_range = 1e12;

  // [leader]
  double epsilon = 1e-4;
  std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  double cg_tol = 1e-8;
  int cg_max_iter = 2000;

  // [outer]
  int outer_max_iter = 50;
  double outer_tol = 1e-8;
  double damping = 0.5;

  // [probe]
  std::size_t probe_trials = 20;
  std::size_t hardy_trials = 200;
  std::size_t hardy_n = 400;
  std::size_t convexity_samples = 50;

  // [run]
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

/// Every violated invariant, each starting with the offending field name(s).
std::vector<std::string> validate(const RunConfig& cfg);

/// Parses key = value sections; unknown keys and malformed values are errors with line numbers.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_config(const std::string& path);

/// Canonical text of every field, stable across runs; its SHA-256 is the config hash.
std::string canonical_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// A problem with its Carleman data. Held behind a pointer because solvers keep references.
struct Setup {
  RunConfig config;
  Problem problem;
  SigmaProfile sigma;
  CarlemanParams params;
  WeightBundle weights;

  OuterConfig outer_config() const;
  PenalizationConfig leader_config() const;
};

std::unique_ptr<Setup> build_setup(const RunConfig& cfg);

/// Coefficients of the dynamics frozen at w = 0.
LinearizedCoefficients zero_state_coefficients(const Problem& pb);

}  // namespace hierctl
