#pragma once

// Monte Carlo checks of the distributional estimates: tails of the sup of
// increments, decay of increment and joint densities, positivity.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracdim/experiment_spec.hpp"
#include "fracdim/fbm.hpp"
#include "fracdim/simulation.hpp"

namespace fracdim {

struct TailCurve {
  std::vector<double> xi_values;
  /// log P(sup |X_v - X_u| >= xi); -infinity where no member exceeds xi.
  std::vector<double> log_probs;
  std::size_t ensemble_size = 0;
  double s = 0.0;
  double t = 1.0;
  std::vector<std::string> warnings;
};

/// sup_{s <= u < v <= t} |X_v - X_u| over the grid nodes in [s, t].
double sup_increment(const SamplePath& path, double s, double t);

/// One sup increment per ensemble member for field set `field_index`.
std::vector<double> sup_increment_samples(const Simulator& sim, std::size_t field_index, double s,
                                          double t, unsigned jobs = 0);

/// Empirical survival function of `samples` at each xi (sorted ascending).
TailCurve tail_curve(std::span<const double> samples, std::span<const double> xi_grid, double s,
                     double t);

/// Grid of n values at the empirical exceedance levels q_hi .. q_lo,
/// geometrically spaced in probability.
std::vector<double> quantile_xi_grid(std::span<const double> samples, std::size_t n, double q_hi,
                                     double q_lo);

/// Simulates the experiment's first field set; requires ensemble >= 1000.
TailCurve tail_curve_sup_increment(const ExperimentSpec& spec, double s, double t,
                                   std::span<const double> xi_grid, unsigned jobs = 0);

struct ExponentFit {
  double best_exponent = 0.0;
  std::vector<double> exponents;
  std::vector<double> slopes;
  std::vector<double> intercepts;
  std::vector<double> r2s;
  std::size_t points_used = 0;

  /// R^2 of a candidate, which must be in `exponents`.
  double r2_of(double exponent) const;
};

/// Fits log_prob = slope * xi^a + c for each candidate a over the points with
/// finite, strictly negative log probability; needs at least 5 of them.
ExponentFit fit_tail_exponent(const TailCurve& curve, std::span<const double> candidates);

struct TimeScaling {
  std::vector<double> lengths;
  std::vector<double> log_probs;
  /// Slope of log_prob against log(t - s) over the finite points.
  double slope = 0.0;
  /// Spearman correlation of -log_prob with xi^2 / (t - s)^{2H}.
  double rank_correlation = 0.0;
  /// Adjacent pairs where a shorter interval did not lower the exceedance.
  std::size_t inversions = 0;
  std::vector<std::string> warnings;
};

/// Exceedance of a fixed xi for intervals sharing s; lengths sorted
/// descending in the result.
TimeScaling scaling_from_samples(std::span<const std::vector<double>> samples_per_interval,
                                 std::span<const double> lengths, double xi, double hurst);
TimeScaling scaling_check_time(const ExperimentSpec& spec, std::span<const std::pair<double, double>> intervals,
                               double xi, unsigned jobs = 0);

/// Product Gaussian kernel estimate over samples in R^dim (row-major).
struct DensityEstimate {
  std::size_t dim = 1;
  std::vector<double> centers;
  std::vector<double> values;
  std::vector<double> bandwidth;
  std::size_t ensemble_size = 0;
  double s = 0.0;
  double t = 1.0;
};

/// Per-coordinate 1.06 * sd * m^{-1/(4+dim)}; throws when a coordinate has
/// zero interquartile range.
std::vector<double> kde_bandwidth(std::span<const double> samples, std::size_t dim);

DensityEstimate kde_evaluate(std::span<const double> samples, std::size_t dim,
                             std::span<const double> centers, unsigned jobs = 0);

/// X_t - X_s per member, row-major.
std::vector<double> increment_samples(const Simulator& sim, std::size_t field_index, double s,
                                      double t, unsigned jobs = 0);
/// X_t per member.
std::vector<double> marginal_samples(const Simulator& sim, std::size_t field_index, double t,
                                     unsigned jobs = 0);

/// Requires s >= 0.1 and ensemble >= 10^4.
DensityEstimate kde_increment(const ExperimentSpec& spec, double s, double t,
                              std::span<const double> centers, unsigned jobs = 0);

struct EnvelopeFit {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Bins the points by x into `bins` equal-width bins, keeps the upper decile
/// of y in each non-empty bin and fits a line through the bin maxima.
EnvelopeFit upper_envelope_fit(std::span<const double> x, std::span<const double> y, std::size_t bins);

/// Envelope of log(p(z) (t - s)^{dH}) against |z|^{min(2H + 1, 2)}.
EnvelopeFit increment_decay_fit(const DensityEstimate& est, double hurst, std::size_t bins);

struct PositivityResult {
  double min_value = 0.0;
  /// Smallest value a single sample can contribute at its own location.
  double resolution_floor = 0.0;
  std::size_t lattice_points = 0;
  std::size_t ensemble_size = 0;
  /// "positive", "untestable" or "zero".
  std::string verdict;
};

inline constexpr std::size_t kPositivityMinEnsemble = 1000;
inline constexpr std::size_t kPositivityMaxLattice = 10000;

PositivityResult positivity_from_samples(std::span<const double> samples, std::size_t dim,
                                         std::span<const double> lo, std::span<const double> hi,
                                         std::size_t per_axis, unsigned jobs = 0);
/// Smoothed density of X_t over a lattice of per_axis^d points in the box.
PositivityResult positivity_scan(const ExperimentSpec& spec, double t, std::span<const double> lo,
                                 std::span<const double> hi, std::size_t per_axis, unsigned jobs = 0);

struct BivariatePoint {
  double offset = 0.0;
  double value = 0.0;
};

struct BivariateDecay {
  /// Median of X_s, first coordinate shifted by each offset for X_t.
  std::vector<double> anchor;
  std::vector<BivariatePoint> points;
  double gamma = 0.0;
  /// Envelope of log value against |offset|^{2 gamma} / (t - s)^{2 gamma^2}.
  EnvelopeFit envelope;
};

BivariateDecay bivariate_from_samples(std::span<const double> xs, std::span<const double> xt,
                                      std::size_t dim, double s, double t, double hurst,
                                      std::span<const double> offsets, unsigned jobs = 0);
/// Requires 0.1 <= s < t and ensemble >= 10^4.
BivariateDecay kde_bivariate_decay(const ExperimentSpec& spec, double s, double t,
                                   std::span<const double> offsets, unsigned jobs = 0);

/// CSV exports: `xi,log_prob` and `z1..zd,value`.
std::string tail_curve_csv(const TailCurve& curve);
std::string density_csv(const DensityEstimate& est);

/// {theorem, exponent_tested, slope, r2, verdict}.
nlohmann::json verdict_block(const std::string& theorem, double exponent, double slope, double r2,
                             const std::string& verdict);

} // namespace fracdim
