#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracdim {

/// Ordinary least squares y = slope * x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Coefficient of determination; 0 when y has no variance.
  double r_squared = 0.0;
  std::size_t n = 0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
/// Linear-interpolated quantile, q in [0,1]. Copies its input.
double quantile(std::span<const double> x, double q);
double median(std::span<const double> x);

/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov law.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

} // namespace fracdim
