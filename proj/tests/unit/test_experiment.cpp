#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

#include "fracdim/error.hpp"
#include "fracdim/experiment.hpp"
#include "fracdim/experiment_spec.hpp"
#include "fracdim/path_io.hpp"
#include "fracdim/simulation.hpp"

using namespace fracdim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracdim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::set<fs::path> tree(const fs::path& root) {
  std::set<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root));
  return out;
}

} // namespace

TEST(OutputDirectory, SpecOverridesRoot) {
  ExperimentSpec spec;
  spec.name = "exp";
  RunOptions opt;
  opt.output_root = "/tmp/root";
  EXPECT_EQ(output_directory(spec, opt), fs::path("/tmp/root/exp"));
  spec.output_dir = "/tmp/other";
  EXPECT_EQ(output_directory(spec, opt), fs::path("/tmp/other/exp"));
}

TEST(Simulator, MembersArePureFunctionsOfSeed) {
  auto spec = parse_spec("name = sim\nn_points = 128\nhurst = 0.6\ndim = 2\nensemble = 4\n"
                         "fields = identity, elliptic_sin_2d\nbase_seed = 9\n");
  const Simulator a(spec), b(spec);
  EXPECT_EQ(a.driver(2), b.driver(2));
  EXPECT_EQ(a.solution(3, 1), b.solution(3, 1));
  EXPECT_EQ(*a.driver(2).seed(), 11u);
  EXPECT_NE(a.driver(1), a.driver(2));
  // Identity fields started at 0 reproduce the driver.
  const auto d = a.driver(0);
  const auto x = a.solution(0, 0);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(x(i, 1), d(i, 1) - d(0, 1), 1e-12);
}

TEST(Run, GenerateIsByteStable) {
  const auto root = scratch_dir("generate");
  auto spec = parse_spec("name = gen\nn_points = 256\nhurst = 0.7\ndim = 2\nensemble = 3\n");
  RunOptions opt;
  opt.output_root = root / "a";
  opt.jobs = 1;
  const std::vector<std::string> tasks{"generate"};
  run(spec, tasks, opt);
  opt.output_root = root / "b";
  opt.jobs = 3;
  run(spec, tasks, opt);
  for (int m = 0; m < 3; ++m) {
    const std::string f = "gen/paths/driver_0000" + std::to_string(m) + ".frd";
    const auto a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    ASSERT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, b) << f;
    const auto p = read_path_binary(root / "a" / f);
    EXPECT_EQ(p.size(), 257u);
    EXPECT_EQ(*p.seed(), static_cast<std::uint64_t>(m));
  }
  fs::remove_all(root);
}

TEST(Run, NumbersIndependentOfJobs) {
  auto spec = parse_spec("name = jobs\nn_points = 1024\nhurst = 0.75\ndim = 2\nensemble = 4\n"
                         "fields = identity, elliptic_sin_2d\n");
  RunOptions opt;
  opt.write_artifacts = false;
  const std::vector<std::string> tasks{"solve", "dim_image"};
  opt.jobs = 1;
  const auto one = report_numbers(run(spec, tasks, opt));
  opt.jobs = 4;
  const auto four = report_numbers(run(spec, tasks, opt));
  EXPECT_EQ(one.dump(), four.dump());
}

TEST(Run, ArtifactsStayUnderOutputDirectory) {
  const auto root = scratch_dir("artifacts");
  auto spec = parse_spec("name = art\nn_points = 1024\nhurst = 0.6\nensemble = 2\n");
  RunOptions opt;
  opt.output_root = root;
  const std::vector<std::string> tasks{"generate", "solve", "dim_graph"};
  const auto rep = run(spec, tasks, opt);
  for (const auto& p : tree(root)) EXPECT_EQ(*p.begin(), fs::path("art")) << p;
  EXPECT_TRUE(fs::exists(root / "art" / "report.txt"));
  EXPECT_TRUE(fs::exists(root / "art" / "report.json"));
  EXPECT_TRUE(fs::exists(root / "art" / "estimates.csv"));
  EXPECT_EQ(slurp(root / "art" / "estimates.csv").rfind("estimator,H,d,n_points,seed,param,slope,r2,value\n", 0), 0u);
  EXPECT_FALSE(rep.verdicts.empty());
  fs::remove_all(root);
}

TEST(Run, FailingMembersAreTallied) {
  // X = x0 exp(B) crosses the overflow guard for members with max B > ln 5.
  auto spec = parse_spec("name = fail\nn_points = 64\ndim = 1\nfields = geometric_1d\n"
                         "ensemble = 40\nx0 = 2e11\n[run]\nmax_failure_fraction = 1\n");
  RunOptions opt;
  opt.write_artifacts = false;
  const std::vector<std::string> tasks{"solve"};
  const auto rep = run(spec, tasks, opt);
  EXPECT_FALSE(rep.aborted);
  EXPECT_GT(rep.members_failed, 0u);
  EXPECT_LT(rep.members_failed, 40u);
  EXPECT_EQ(rep.results["failures"].size(), rep.members_failed);
  EXPECT_NE(rep.results["failures"][0]["error"].get<std::string>().find("overflow guard"),
            std::string::npos);

  spec.estimator_params.erase("run.max_failure_fraction");
  const auto strict = run(spec, tasks, opt);
  EXPECT_TRUE(strict.aborted);
  EXPECT_EQ(exit_status(strict), 2);
}

TEST(Run, RejectsUnknownOrEmptyTasks) {
  auto spec = parse_spec("name = bad\nn_points = 16\n");
  RunOptions opt;
  opt.write_artifacts = false;
  EXPECT_THROW(run(spec, std::vector<std::string>{}, opt), ConfigError);
  EXPECT_THROW(run(spec, std::vector<std::string>{"dance"}, opt), ConfigError);
}
