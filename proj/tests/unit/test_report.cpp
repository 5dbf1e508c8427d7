#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "fracdim/report.hpp"

using namespace fracdim;

TEST(WindowVerdict, InclusiveBoundsAndNan) {
  EXPECT_EQ(window_verdict("t", "c", "a", 1.0, 1.0, 2.0, "tol").status, VerdictStatus::pass);
  EXPECT_EQ(window_verdict("t", "c", "a", 2.0, 1.0, 2.0, "tol").status, VerdictStatus::pass);
  EXPECT_EQ(window_verdict("t", "c", "a", 2.5, 1.0, 2.0, "tol").status, VerdictStatus::fail);
  EXPECT_EQ(window_verdict("t", "c", "a", NAN, 1.0, 2.0, "tol").status, VerdictStatus::untestable);
  EXPECT_EQ(window_verdict("t", "c", "a", INFINITY, 1.0, INFINITY, "tol").status,
            VerdictStatus::pass);
}

TEST(ExitStatus, Rules) {
  RunReport r;
  EXPECT_EQ(exit_status(r), 0);
  r.verdicts.push_back(window_verdict("t", "c", "a", NAN, 0, 1, ""));
  EXPECT_EQ(exit_status(r), 0);
  r.verdicts.push_back(window_verdict("t", "c", "a", 5, 0, 1, ""));
  EXPECT_EQ(exit_status(r), 1);
  r.aborted = true;
  EXPECT_EQ(exit_status(r), 2);
}

TEST(Render, EmptyReportHasBanner) {
  RunReport r;
  r.spec["name"] = "empty";
  const auto out = report_render(r);
  EXPECT_NE(out.text.find("experiment: empty"), std::string::npos);
  EXPECT_NE(out.text.find("*** no claims tested ***"), std::string::npos);
  EXPECT_EQ(out.json["exit_status"], 0);
}

TEST(Render, FailingVerdictsComeFirst) {
  RunReport r;
  r.spec["name"] = "order";
  r.verdicts.push_back(window_verdict("first_pass", "c", "a", 0.5, 0, 1, "w"));
  r.verdicts.push_back(window_verdict("second_fail", "c", "a", 3, 0, 1, "w"));
  r.verdicts.push_back(window_verdict("third_pass", "c", "a", 0.5, 0, 1, "w"));
  const auto out = report_render(r);
  const auto f = out.text.find("second_fail");
  const auto p1 = out.text.find("first_pass");
  const auto p3 = out.text.find("third_pass");
  ASSERT_NE(f, std::string::npos);
  EXPECT_LT(f, p1);
  EXPECT_LT(p1, p3);
  EXPECT_EQ(out.json["verdicts"][0]["task"], "second_fail");
  EXPECT_EQ(out.json["verdicts"][0]["status"], "fail");
  EXPECT_EQ(out.json["exit_status"], 1);
}

TEST(Render, NonFiniteNumbersAreStrings) {
  RunReport r;
  r.verdicts.push_back(window_verdict("t", "c", "a", NAN, 0.8, INFINITY, "w"));
  const auto j = report_numbers(r);
  EXPECT_EQ(j["verdicts"][0]["measured"], "nan");
  EXPECT_EQ(j["verdicts"][0]["window"][1], "inf");
  EXPECT_NO_THROW((void)j.dump());
}

TEST(ReportNumbers, WallTimeExcluded) {
  RunReport a, b;
  a.wall_seconds = 1.0;
  b.wall_seconds = 99.0;
  a.results["x"] = 1.5;
  b.results["x"] = 1.5;
  EXPECT_EQ(report_numbers(a), report_numbers(b));
  EXPECT_TRUE(report_render(a).json.contains("wall_seconds"));
  EXPECT_FALSE(report_numbers(a).contains("wall_seconds"));
}

TEST(Render, AbortReasonIsShown) {
  RunReport r;
  r.aborted = true;
  r.abort_reason = "solve: 5 of 10 members failed";
  const auto out = report_render(r);
  EXPECT_NE(out.text.find("ABORTED: solve: 5 of 10 members failed"), std::string::npos);
  EXPECT_EQ(out.json["exit_status"], 2);
}
