#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fracdim {

enum class VerdictStatus { pass, fail, untestable };

std::string to_string(VerdictStatus status);

/// One tested claim: what was measured, the acceptance window and outcome.
struct Verdict {
  std::string task;
  std::string claim;
  /// Which result the claim comes from, in words.
  std::string anchor;
  double measured = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// How the window was set, e.g. "+-0.15 around 4/3".
  std::string tolerance;
  VerdictStatus status = VerdictStatus::untestable;
  std::string detail;
};

/// Pass iff lo <= measured <= hi; NaN measurements are untestable.
Verdict window_verdict(std::string task, std::string claim, std::string anchor, double measured,
                       double lo, double hi, std::string tolerance);

struct RunReport {
  nlohmann::json spec = nlohmann::json::object();
  /// Per-task numeric results; bit-identical across reruns of a spec.
  nlohmann::json results = nlohmann::json::object();
  double wall_seconds = 0.0;
  nlohmann::json versions = nlohmann::json::object();
  std::vector<Verdict> verdicts;
  std::size_t members_run = 0;
  std::size_t members_failed = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// 0 iff the run completed and every verdict passed or was untestable.
int exit_status(const RunReport& report);

struct RenderedReport {
  std::string text;
  nlohmann::json json;
};

/// Text tables (failing verdicts first) and the machine-readable report.
RenderedReport report_render(const RunReport& report);

/// The report without wall time, for reproducibility comparisons.
nlohmann::json report_numbers(const RunReport& report);

} // namespace fracdim
