#include "fracdim/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace fracdim {

std::string to_string(VerdictStatus status) {
  switch (status) {
  case VerdictStatus::pass: return "pass";
  case VerdictStatus::fail: return "fail";
  case VerdictStatus::untestable: return "untestable";
  }
  return "untestable";
}

Verdict window_verdict(std::string task, std::string claim, std::string anchor, double measured,
                       double lo, double hi, std::string tolerance) {
  Verdict v;
  v.task = std::move(task);
  v.claim = std::move(claim);
  v.anchor = std::move(anchor);
  v.measured = measured;
  v.lo = lo;
  v.hi = hi;
  v.tolerance = std::move(tolerance);
  if (std::isnan(measured))
    v.status = VerdictStatus::untestable;
  else
    v.status = (measured >= lo && measured <= hi) ? VerdictStatus::pass : VerdictStatus::fail;
  return v;
}

int exit_status(const RunReport& report) {
  if (report.aborted) return 2;
  for (const auto& v : report.verdicts)
    if (v.status == VerdictStatus::fail) return 1;
  return 0;
}

namespace {

nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

nlohmann::json verdict_json(const Verdict& v) {
  return {{"task", v.task},         {"claim", v.claim},       {"anchor", v.anchor},
          {"measured", number(v.measured)}, {"window", {number(v.lo), number(v.hi)}},
          {"tolerance", v.tolerance}, {"status", to_string(v.status)}, {"detail", v.detail}};
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::vector<Verdict> ordered(const std::vector<Verdict>& in) {
  std::vector<Verdict> out = in;
  std::stable_partition(out.begin(), out.end(),
                        [](const Verdict& v) { return v.status == VerdictStatus::fail; });
  return out;
}

} // namespace

nlohmann::json report_numbers(const RunReport& report) {
  nlohmann::json j;
  j["spec"] = report.spec;
  j["results"] = report.results;
  j["members_run"] = report.members_run;
  j["members_failed"] = report.members_failed;
  j["aborted"] = report.aborted;
  j["abort_reason"] = report.abort_reason;
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : ordered(report.verdicts)) j["verdicts"].push_back(verdict_json(v));
  return j;
}

RenderedReport report_render(const RunReport& report) {
  RenderedReport out;
  out.json = report_numbers(report);
  out.json["wall_seconds"] = report.wall_seconds;
  out.json["versions"] = report.versions;
  out.json["exit_status"] = exit_status(report);

  std::ostringstream os;
  const std::string name = report.spec.contains("name") ? report.spec["name"].get<std::string>() : "";
  os << "experiment: " << name << "\n";
  os << "members: " << report.members_run << " run, " << report.members_failed << " failed\n";
  if (report.aborted) os << "ABORTED: " << report.abort_reason << "\n";
  if (report.verdicts.empty()) {
    os << "\n*** no claims tested ***\n";
  }
  for (const auto& v : ordered(report.verdicts)) {
    os << "\n[" << to_string(v.status) << "] " << v.task << "\n";
    os << "  claim     " << v.claim << "\n";
    os << "  anchor    " << v.anchor << "\n";
    os << "  measured  " << fmt(v.measured) << "\n";
    os << "  window    [" << fmt(v.lo) << ", " << fmt(v.hi) << "]  (" << v.tolerance << ")\n";
    if (!v.detail.empty()) os << "  detail    " << v.detail << "\n";
  }
  os << "\nwall time: " << std::fixed << std::setprecision(2) << report.wall_seconds << " s\n";
  os << "exit status: " << exit_status(report) << "\n";
  out.text = os.str();
  return out;
}

} // namespace fracdim
