#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hierctl/config.hpp"
#include "hierctl/error.hpp"

namespace hierctl {

/// Experiment names accepted by run_experiment.
const std::vector<std::string>& experiment_names();

struct ExperimentOutcome {
  std::vector<std::filesystem::path> artifacts;
  /// The JSON summary that was also written to <name>_summary.json.
  std::string summary;
};

/**
 * Runs one pipeline and writes its artifacts into `out_dir`. Every CSV starts with the config
 * hash and seed; identical config and seed give byte-identical files. Throws UsageError for an
 * unknown name and the module errors otherwise.
 */
ExperimentOutcome run_experiment(const std::string& name, const RunConfig& cfg,
                                 const std::filesystem::path& out_dir);

/// Exit code for an exception escaping run_experiment (0 is never returned).
int exit_code_for(const std::exception& e);

}  // namespace hierctl
