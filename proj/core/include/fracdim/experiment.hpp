#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "fracdim/experiment_spec.hpp"
#include "fracdim/report.hpp"

namespace fracdim {

struct RunOptions {
  /// Worker threads; 0 means one per core.
  unsigned jobs = 0;
  /// Used when the experiment config leaves output_dir empty.
  std::filesystem::path output_root = "fracdim_out";
  bool write_artifacts = true;
};

/// output_dir (or the root from options) joined with the experiment name.
std::filesystem::path output_directory(const ExperimentSpec& spec, const RunOptions& options);

/// Runs the tasks in order. Artifacts land in output_directory(); nothing is
/// written elsewhere. A member whose computation throws is tallied; the run
/// aborts once failures exceed run.max_failure_fraction of the members.
RunReport run(const ExperimentSpec& spec, std::span<const std::string> tasks,
              const RunOptions& options = {});
/// Runs spec.tasks.
RunReport run(const ExperimentSpec& spec, const RunOptions& options = {});

/// Writes report.txt and report.json into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

} // namespace fracdim
