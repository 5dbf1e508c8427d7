#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fracdim/stats.hpp"
#include "generators.hpp"

using namespace fracdim;

TEST(LinearFit, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = linear_fit(x, y);
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
  EXPECT_EQ(f.n, 4u);
}

TEST(LinearFit, FlatResponseHasZeroRSquared) {
  const std::vector<double> x{0, 1, 2}, y{4, 4, 4};
  const auto f = linear_fit(x, y);
  EXPECT_EQ(f.slope, 0.0);
  EXPECT_EQ(f.r_squared, 0.0);
}

TEST(Quantile, InterpolatesLinearly) {
  const std::vector<double> x{3, 1, 2, 4};
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(median(x), 2.5);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0 / 3.0), 2.0);
}

TEST(Moments, MeanAndUnbiasedVariance) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(variance(x), 5.0 / 3.0);
}

TEST(Ranks, TiesShareMeanRank) {
  const std::vector<double> x{10, 20, 20, 5};
  const auto r = ranks(x);
  EXPECT_EQ(r, (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, SpearmanIsInvariantUnderMonotoneMaps) {
  gen::Engine g(5);
  const auto x = gen::gaussian_vector(g, 200);
  auto y = gen::gaussian_vector(g, 200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
  std::vector<double> ex(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ex[i] = std::exp(3.0 * x[i]);
  EXPECT_NEAR(spearman(x, y), spearman(ex, y), 1e-12);
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-12);
}

TEST(KolmogorovSmirnov, SameAndShiftedSamples) {
  gen::Engine g(6);
  const auto a = gen::gaussian_vector(g, 5000);
  const auto b = gen::gaussian_vector(g, 5000);
  auto c = gen::gaussian_vector(g, 5000);
  for (auto& v : c) v += 0.2;
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
  EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
}
