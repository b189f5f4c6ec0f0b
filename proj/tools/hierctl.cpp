// Command line front end: hierctl <experiment> [--config PATH] [--seed N] [--out DIR]

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

#include "hierctl/artifacts.hpp"
#include "hierctl/experiments.hpp"

int main(int argc, char** argv) {
  using namespace hierctl;
  CLI::App app{"Hierarchical control experiments for coupled degenerate parabolic systems"};
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;

  std::string choices;
  for (const auto& n : experiment_names()) choices += (choices.empty() ? "" : ", ") + n;
  app.add_option("experiment", experiment, "One of: " + choices)->required();
  app.add_option("--config,-c", config_path, "Run configuration (key = value sections)");
  app.add_option("--seed,-s", seed, "Base seed, overrides the config")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--out,-o", out_dir, "Output directory (else $HIERCTL_OUT_DIR, else config)");
  app.add_flag("--quiet,-q", quiet, "Do not print the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorClass::usage);
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(config_path);
    if (seed_given) cfg.seed = seed;
    const auto dir = resolve_output_dir(out_dir, cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentOutcome out = run_experiment(experiment, cfg, dir);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!quiet) std::cout << out.summary;
    std::cerr << experiment << ": wrote " << out.artifacts.size() << " files to " << dir.string()
              << " in " << secs << " s\n";
    return 0;
  } catch (const std::exception& e) {
    const int rc = exit_code_for(e);
    std::cerr << "error class=" << to_string(static_cast<ErrorClass>(rc)) << " code=" << rc;
    const auto* ce = dynamic_cast<const ConfigError*>(&e);
    if (ce && !ce->violations().empty()) {
      std::cerr << ": invalid configuration\n";
      for (const auto& v : ce->violations()) std::cerr << "  " << v << "\n";
    } else {
      std::cerr << ": " << e.what() << "\n";
    }
    return rc;
  }
}
