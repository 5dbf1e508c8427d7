#pragma once

// Empirical fractal analysis of sampled paths: box counting on images and
// graphs, level sets, Riesz energies and the mollified occupation measures
// mu_n used in the level-set lower bound.

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "fracdim/fbm.hpp"

namespace fracdim {

/// Points in R^dim_embed, stored row-major.
class PointCloud {
public:
  PointCloud(std::size_t dim_embed, std::vector<double> coords);

  std::size_t dim_embed() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }

  /// Largest coordinate extent (max over axes of max - min).
  double span() const noexcept;

private:
  std::size_t dim_;
  std::vector<double> coords_;
};

/// The image X([t0, t1]) as a d-dimensional cloud.
PointCloud image_cloud(const SamplePath& path);
/// The graph {(t, X_t)} as a (1+d)-dimensional cloud; time is not rescaled.
PointCloud graph_cloud(const SamplePath& path);

/// Number of origin-anchored cells of side epsilon holding at least one point.
std::size_t box_count(const PointCloud& cloud, double epsilon);

struct ScaleRange {
  double eps_max = 0.0;
  double eps_min = 0.0;
};

struct DimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// Scales entering the fit, strictly decreasing.
  std::vector<double> scales_used;
  std::vector<std::size_t> counts;
  /// All points coincide (or every count is equal): slope 0 by convention.
  bool degenerate = false;
  /// Fewer than three scales satisfied N(eps) < n/4; the fit used all scales.
  bool saturated = false;
};

/// Counts with N(eps) >= n_points / 4 are outside the estimator's validity
/// window and are dropped from the fit.
inline constexpr double kSaturationFraction = 0.25;

/// Least-squares slope of log N(eps) against -log eps on a geometric ladder
/// of n_scales scales from eps_max down to eps_min.
DimensionEstimate box_dimension(const PointCloud& cloud, ScaleRange range, std::size_t n_scales);

/// Ladder from min(span/8, eps_cap) down to max(resolution, span/2^10).
ScaleRange default_scale_range(const PointCloud& cloud, double resolution,
                               double eps_cap = std::numeric_limits<double>::infinity());

/// Finest scale at which consecutive samples still land in adjacent cells:
/// the 90th percentile of one-step displacements in the cloud's embedding.
double path_resolution(const PointCloud& cloud);

/// Log-log slope of the largest increment against lag, over dyadic lags with
/// a fixed number of disjoint windows per lag.
double holder_exponent_estimate(const SamplePath& path);

/// Empirical gamma-Holder constant sup |X_t - X_s| / |t - s|^gamma over
/// dyadic lags.
double holder_constant(const SamplePath& path, double gamma);

/// Smallest admissible level-set tube radius: holder_constant * spacing^gamma
/// with gamma = 0.9 H, H taken from the path tag or estimated.
double tube_floor(const SamplePath& path);

struct LevelSet {
  std::vector<double> level;
  double tube_radius = 0.0;
  /// Grid times with |X_t - level| <= tube_radius, ascending.
  std::vector<double> times;
  double t_start = 0.0;
  double t_end = 0.0;
  /// Time the path typically needs to cross the tube, never below four grid
  /// spacings. Finer scales see tube thickness rather than the level set.
  double time_resolution = 0.0;
};

/// Rejects tube radii below tube_floor(path).
LevelSet extract_level_set(const SamplePath& path, std::span<const double> level, double eta);

/// The 1-d cloud of a level set's times; requires a non-empty set.
PointCloud time_cloud(const LevelSet& set);

/// Ladder from (t_end - t_start)/8 down to the set's time resolution.
ScaleRange level_set_scale_range(const LevelSet& set);

struct EnergyValue {
  double gamma = 0.0;
  /// +infinity when two off-diagonal grid points coincide.
  double value = 0.0;
  double diagonal_cut = 0.0;
};

/// Riesz energy int int f(|X_t - X_s|) ds dt over window^2, trapezoid
/// weights, pairs closer than one grid spacing in time excluded. f(r) = r^-gamma
/// for gamma > 0 and log(e / min(r, 1)) for gamma = 0.
EnergyValue energy_integral(const SamplePath& path, double gamma, std::span<const double, 2> window);

/// The same double sum split by time lag: band j holds the pairs whose lag
/// lies in (L 2^{-j-1}, L 2^{-j}], L the window length, for j = 0 .. while
/// the band still reaches one grid spacing. Bands sum to energy_integral().
std::vector<double> energy_lag_bands(const SamplePath& path, double gamma, std::span<const double, 2> window);

struct MuMeasure {
  double mass = 0.0;
  /// int int mu(ds) mu(dt) / |t - s|^gamma, diagonal excluded.
  double gamma_energy = 0.0;
};

/// mu_n(C) = int_C (2 pi n)^{d/2} exp(-n |X_t - x|^2 / 2) dt over the window.
MuMeasure mu_measure(const SamplePath& path, std::span<const double> level, double n, double gamma,
                     std::span<const double, 2> window);

/// Quadrature weights over [a, b] for integrands known at grid nodes: the
/// exact integral of the piecewise-linear interpolant. Equals the trapezoid
/// rule when a and b are grid points.
struct NodeWeights {
  std::size_t first = 0;
  std::vector<double> weights;
};
NodeWeights node_weights(const TimeGrid& grid, double a, double b);

} // namespace fracdim
