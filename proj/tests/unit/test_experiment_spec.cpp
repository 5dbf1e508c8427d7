#include <gtest/gtest.h>

#include <string>

#include "fracdim/error.hpp"
#include "fracdim/experiment_spec.hpp"

using namespace fracdim;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(ParseSpec, MinimalDocumentTakesDefaults) {
  const auto spec = parse_spec("name = tiny\nn_points = 64\n");
  EXPECT_EQ(spec.name, "tiny");
  EXPECT_EQ(spec.n_points, 64u);
  EXPECT_EQ(spec.hurst, 0.5);
  EXPECT_EQ(spec.dim, 1u);
  EXPECT_EQ(spec.generator, GeneratorKind::circulant);
  EXPECT_EQ(spec.scheme, SchemeKind::step2_davie);
  EXPECT_EQ(spec.ensemble, 1u);
  EXPECT_EQ(spec.fields, std::vector<std::string>{"identity"});
  EXPECT_EQ(spec.grid().n_points(), 65u);
  EXPECT_EQ(spec.param("dim_image.n_scales"), 12.0);
}

TEST(ParseSpec, FullDocument) {
  const auto spec = parse_spec(R"(
# image dimension run
name = full
hurst = 0.75
dim = 2
n_points = 1024   # intervals
t_range = 0, 2
generator = cholesky
fields = identity, elliptic_sin_2d
scheme = step3
ensemble = 8
base_seed = 42
x0 = 0.5, -0.5
tasks = dim_image, dim_graph
[dim_image]
n_scales = 10
)");
  EXPECT_EQ(spec.hurst, 0.75);
  EXPECT_EQ(spec.t_end, 2.0);
  EXPECT_EQ(spec.generator, GeneratorKind::cholesky);
  EXPECT_EQ(spec.fields.size(), 2u);
  EXPECT_EQ(spec.scheme, SchemeKind::step3);
  EXPECT_EQ(spec.member_seed(3), 45u);
  EXPECT_EQ(spec.initial_state(), (std::vector<double>{0.5, -0.5}));
  EXPECT_EQ(spec.param("dim_image.n_scales"), 10.0);
  EXPECT_EQ(spec.tasks, (std::vector<std::string>{"dim_image", "dim_graph"}));
}

TEST(ParseSpec, AutoSchemeFollowsHurst) {
  EXPECT_EQ(parse_spec("name = a\nn_points = 8\nhurst = 0.3\n").scheme, SchemeKind::step3);
  EXPECT_EQ(parse_spec("name = a\nn_points = 8\nhurst = 0.6\n").scheme, SchemeKind::step2_davie);
}

TEST(ParseSpec, InitialStateBroadcasts) {
  const auto spec = parse_spec("name = a\nn_points = 8\ndim = 3\nx0 = 1.5\n");
  EXPECT_EQ(spec.initial_state(), (std::vector<double>(3, 1.5)));
}

TEST(ParseSpec, DistinctMessagesPerFailure) {
  EXPECT_NE(message_of("name = a\nn_points = 8\nhurst = 0.2\n").find("hurst must lie in (0.25, 1)"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 100\n").find("power of two"), std::string::npos);
  EXPECT_NE(message_of("name = a\n").find("n_points is required"), std::string::npos);
  EXPECT_NE(message_of("n_points = 8\n").find("name is required"), std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\nfields = nope\n").find("unknown field"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\ncolour = red\n").find("unknown key: colour"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\n[dim_image]\nfoo = 1\n").find("dim_image.foo"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\nname = b\n").find("duplicate key"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\nhurst = 0.3\nscheme = step2_davie\n").find("step3"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\nensemble = many\n").find("nonnegative integer"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\ntasks = dance\n").find("unknown task"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\nline without equals\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(message_of("name = ../x\nn_points = 8\n").find("plain directory name"),
            std::string::npos);
  EXPECT_NE(message_of("name = a\nn_points = 8\ndim = 2\nx0 = 1, 2, 3\n").find("x0"),
            std::string::npos);
}

TEST(ParseSpec, MissingFile) {
  EXPECT_THROW(parse_spec_file("/nonexistent/spec.cfg"), ConfigError);
}

TEST(EstimatorParams, DefaultsAndUnknownKeys) {
  ExperimentSpec spec;
  spec.name = "p";
  spec.n_points = 16;
  validate_spec(spec);
  EXPECT_EQ(spec.param_text("tail.exponents"), "1.6, 1.8, 2.0");
  EXPECT_THROW(spec.param("nope.key"), ConfigError);
  spec.estimator_params["tail.r2_floor"] = "0.5";
  EXPECT_EQ(spec.param("tail.r2_floor"), 0.5);
  spec.estimator_params["tail.bogus"] = "1";
  EXPECT_THROW(validate_spec(spec), ConfigError);
}

TEST(EstimatorParams, EveryDefaultIsWellFormed) {
  for (const auto& [key, value] : estimator_defaults()) {
    EXPECT_NE(key.find('.'), std::string::npos) << key;
    EXPECT_FALSE(value.empty()) << key;
  }
}

TEST(SpecJson, RoundTripsTheFields) {
  const auto spec = parse_spec("name = j\nn_points = 32\nhurst = 0.4\nfields = identity\n");
  const auto j = spec_to_json(spec);
  EXPECT_EQ(j["name"], "j");
  EXPECT_EQ(j["n_points"], 32);
  EXPECT_EQ(j["scheme"], "step2_davie");
  EXPECT_EQ(j["scheme_requested"], "auto");
  EXPECT_EQ(j["generator"], "circulant");
}
