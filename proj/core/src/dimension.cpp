#include "fracdim/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "fracdim/error.hpp"
#include "fracdim/stats.hpp"

namespace fracdim {

// ---------------------------------------------------------------------------
// Point clouds

PointCloud::PointCloud(std::size_t dim_embed, std::vector<double> coords)
    : dim_(dim_embed), coords_(std::move(coords)) {
  if (dim_ == 0) throw InvalidArgument("point cloud dimension must be positive");
  if (coords_.empty()) throw InvalidArgument("point cloud is empty");
  if (coords_.size() % dim_ != 0)
    throw InvalidArgument("point cloud coordinate count is not a multiple of its dimension");
  for (double v : coords_)
    if (!std::isfinite(v)) throw InvalidArgument("point cloud contains a non-finite coordinate");
}

double PointCloud::span() const noexcept {
  double widest = 0.0;
  for (std::size_t c = 0; c < dim_; ++c) {
    double lo = coords_[c], hi = coords_[c];
    for (std::size_t i = c; i < coords_.size(); i += dim_) {
      lo = std::min(lo, coords_[i]);
      hi = std::max(hi, coords_[i]);
    }
    widest = std::max(widest, hi - lo);
  }
  return widest;
}

PointCloud image_cloud(const SamplePath& path) {
  return PointCloud(path.dim(), std::vector<double>(path.values().begin(), path.values().end()));
}

PointCloud graph_cloud(const SamplePath& path) {
  const std::size_t d = path.dim();
  std::vector<double> coords;
  coords.reserve(path.size() * (d + 1));
  for (std::size_t i = 0; i < path.size(); ++i) {
    coords.push_back(path.grid().time(i));
    auto p = path.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return PointCloud(d + 1, std::move(coords));
}

// ---------------------------------------------------------------------------
// Box counting

namespace {

constexpr int kPackBits = 21;
constexpr std::int64_t kPackOffset = std::int64_t{1} << (kPackBits - 1);

std::size_t count_packed(const PointCloud& cloud, double epsilon, bool& ok) {
  const std::size_t dim = cloud.dim_embed();
  std::vector<std::uint64_t> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    std::uint64_t key = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double cell = std::floor(p[c] / epsilon);
      if (!(std::abs(cell) < static_cast<double>(kPackOffset))) {
        ok = false;
        return 0;
      }
      const auto shifted = static_cast<std::uint64_t>(static_cast<std::int64_t>(cell) + kPackOffset);
      key |= shifted << (kPackBits * c);
    }
    keys[i] = key;
  }
  std::sort(keys.begin(), keys.end());
  ok = true;
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

std::size_t count_general(const PointCloud& cloud, double epsilon) {
  const std::size_t dim = cloud.dim_embed();
  std::vector<std::vector<double>> keys(cloud.size(), std::vector<double>(dim));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t c = 0; c < dim; ++c) keys[i][c] = std::floor(p[c] / epsilon);
  }
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

} // namespace

std::size_t box_count(const PointCloud& cloud, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidArgument("box size must be positive and finite");
  if (static_cast<std::size_t>(kPackBits) * cloud.dim_embed() <= 64) {
    bool ok = false;
    const std::size_t n = count_packed(cloud, epsilon, ok);
    if (ok) return n;
  }
  return count_general(cloud, epsilon);
}

DimensionEstimate box_dimension(const PointCloud& cloud, ScaleRange range, std::size_t n_scales) {
  if (n_scales < 4) throw InvalidArgument("box dimension needs at least 4 scales");
  if (!(range.eps_min > 0.0) || !(range.eps_max > range.eps_min) || !std::isfinite(range.eps_max))
    throw InvalidArgument("scale range must satisfy 0 < eps_min < eps_max");

  std::vector<double> scales(n_scales);
  std::vector<std::size_t> counts(n_scales);
  const double ratio = range.eps_min / range.eps_max;
  std::size_t running = 0;
  for (std::size_t k = 0; k < n_scales; ++k) {
    scales[k] = range.eps_max * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n_scales - 1));
    // Cells of unrelated sizes are not nested; the running maximum restores
    // the monotonicity a covering number has.
    running = std::max(running, box_count(cloud, scales[k]));
    counts[k] = running;
  }

  DimensionEstimate est;
  const double limit = kSaturationFraction * static_cast<double>(cloud.size());
  for (std::size_t k = 0; k < n_scales; ++k) {
    if (static_cast<double>(counts[k]) < limit) {
      est.scales_used.push_back(scales[k]);
      est.counts.push_back(counts[k]);
    }
  }
  if (est.scales_used.size() < 3) {
    est.saturated = true;
    est.scales_used = scales;
    est.counts = counts;
  }
  if (est.counts.front() == est.counts.back()) {
    est.degenerate = true;
    est.intercept = std::log(static_cast<double>(est.counts.front()));
    return est;
  }
  std::vector<double> x, y;
  for (std::size_t k = 0; k < est.scales_used.size(); ++k) {
    x.push_back(-std::log(est.scales_used[k]));
    y.push_back(std::log(static_cast<double>(est.counts[k])));
  }
  const LinearFit fit = linear_fit(x, y);
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.r_squared = fit.r_squared;
  return est;
}

ScaleRange default_scale_range(const PointCloud& cloud, double resolution, double eps_cap) {
  const double span = cloud.span();
  if (!(span > 0.0)) return {1.0, 1.0 / 1024.0};
  const double eps_max = std::min(span / 8.0, eps_cap);
  double eps_min = std::max(resolution, span / 1024.0);
  if (!(eps_min < eps_max / 2.0))
    throw InvalidArgument("sampling resolution leaves less than one octave of usable scales");
  return {eps_max, eps_min};
}

double path_resolution(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  std::vector<double> steps(cloud.size() - 1);
  for (std::size_t i = 0; i + 1 < cloud.size(); ++i) {
    auto a = cloud.point(i), b = cloud.point(i + 1);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += (b[c] - a[c]) * (b[c] - a[c]);
    steps[i] = std::sqrt(s);
  }
  return quantile(steps, 0.9);
}

// ---------------------------------------------------------------------------
// Holder regularity

namespace {

double distance(const SamplePath& path, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < path.dim(); ++c) {
    const double v = path(j, c) - path(i, c);
    s += v * v;
  }
  return std::sqrt(s);
}

constexpr std::size_t kWindowsPerLag = 64;

// Per dyadic lag: log(lag time), log of the largest and of the median
// increment over disjoint, evenly spread windows.
struct LagProfile {
  std::vector<double> log_tau;
  std::vector<double> log_max;
  std::vector<double> log_median;
};

LagProfile lag_profile(const SamplePath& path) {
  const std::size_t intervals = path.size() - 1;
  const std::size_t windows = std::min(kWindowsPerLag, intervals / 2);
  if (windows < 2) throw InvalidArgument("path is too short for a regularity estimate");
  const std::size_t stride = intervals / windows;
  LagProfile out;
  std::vector<double> incr(windows);
  for (std::size_t lag = 1; lag <= stride; lag *= 2) {
    for (std::size_t k = 0; k < windows; ++k) incr[k] = distance(path, k * stride, k * stride + lag);
    const double mx = *std::max_element(incr.begin(), incr.end());
    const double md = median(incr);
    if (!(mx > 0.0) || !(md > 0.0)) continue;
    out.log_tau.push_back(std::log(static_cast<double>(lag) * path.grid().spacing()));
    out.log_max.push_back(std::log(mx));
    out.log_median.push_back(std::log(md));
  }
  return out;
}

double hurst_of(const SamplePath& path) {
  if (path.hurst()) return path.hurst()->value();
  return std::clamp(holder_exponent_estimate(path), 0.05, 1.0);
}

} // namespace

double holder_exponent_estimate(const SamplePath& path) {
  const LagProfile prof = lag_profile(path);
  if (prof.log_tau.size() < 2) return 1.0; // constant path: arbitrarily smooth
  return linear_fit(prof.log_tau, prof.log_max).slope;
}

double holder_constant(const SamplePath& path, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0) throw InvalidArgument("Holder exponent must lie in (0, 1]");
  const std::size_t n = path.size();
  double best = 0.0;
  for (std::size_t lag = 1; lag < n; lag *= 2) {
    double mx = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) mx = std::max(mx, distance(path, i, i + lag));
    best = std::max(best, mx / std::pow(static_cast<double>(lag) * path.grid().spacing(), gamma));
  }
  return best;
}

double tube_floor(const SamplePath& path) {
  const double gamma = 0.9 * hurst_of(path);
  return holder_constant(path, gamma) * std::pow(path.grid().spacing(), gamma);
}

// ---------------------------------------------------------------------------
// Level sets

LevelSet extract_level_set(const SamplePath& path, std::span<const double> level, double eta) {
  if (level.size() != path.dim()) throw InvalidArgument("level has the wrong dimension");
  if (!(eta > 0.0)) throw InvalidArgument("tube radius must be positive");
  const double floor = tube_floor(path);
  if (eta < floor)
    throw InvalidArgument("tube radius " + std::to_string(eta) + " is below the tube floor " +
                          std::to_string(floor) + " for this grid");
  LevelSet set;
  set.level.assign(level.begin(), level.end());
  set.tube_radius = eta;
  set.t_start = path.grid().t_start();
  set.t_end = path.grid().t_end();
  for (std::size_t i = 0; i < path.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < path.dim(); ++c) s += (path(i, c) - level[c]) * (path(i, c) - level[c]);
    if (std::sqrt(s) <= eta) set.times.push_back(path.grid().time(i));
  }

  const double dt = path.grid().spacing();
  double crossing = 0.0;
  const LagProfile prof = lag_profile(path);
  if (prof.log_tau.size() >= 2) {
    const LinearFit fit = linear_fit(prof.log_tau, prof.log_median);
    if (fit.slope > 0.0) crossing = std::exp((std::log(eta) - fit.intercept) / fit.slope);
  }
  set.time_resolution = std::max(4.0 * dt, crossing);
  return set;
}

PointCloud time_cloud(const LevelSet& set) {
  if (set.times.empty()) throw InvalidArgument("level set is empty");
  return PointCloud(1, set.times);
}

ScaleRange level_set_scale_range(const LevelSet& set) {
  const double eps_max = (set.t_end - set.t_start) / 8.0;
  if (!(set.time_resolution < eps_max / 2.0))
    throw InvalidArgument("tube is too wide for a level-set dimension estimate");
  return {eps_max, set.time_resolution};
}

// ---------------------------------------------------------------------------
// Quadrature, energies, mu_n

NodeWeights node_weights(const TimeGrid& grid, double a, double b) {
  const double t0 = grid.t_start(), t1 = grid.t_end(), h = grid.spacing();
  const double tol = 1e-12 * (t1 - t0);
  if (!(a < b) || a < t0 - tol || b > t1 + tol)
    throw InvalidArgument("integration window must satisfy t_start <= a < b <= t_end");
  a = std::max(a, t0);
  b = std::min(b, t1);
  const std::size_t last_interval = grid.n_points() - 2;
  auto interval_of = [&](double t) {
    const double x = std::floor((t - t0) / h);
    if (!(x > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(x), last_interval);
  };
  // Snap endpoints that sit on a node up to rounding.
  auto snap = [&](double t) {
    const double x = std::round((t - t0) / h);
    const double node = t0 + x * h;
    return std::abs(t - node) <= 1e-9 * h ? node : t;
  };
  a = snap(a);
  b = snap(b);
  const std::size_t ka = interval_of(a);
  std::size_t kb = interval_of(b);
  if (kb > ka && b - (t0 + static_cast<double>(kb) * h) <= 0.0) --kb;

  NodeWeights nw;
  nw.first = ka;
  nw.weights.assign(kb - ka + 2, 0.0);
  for (std::size_t k = ka; k <= kb; ++k) {
    // Interval k = [tk, tk + h]; integrate both hats over its overlap.
    const double tk = t0 + static_cast<double>(k) * h;
    const double lo = (std::max(a, tk) - tk) / h;
    const double hi = (std::min(b, tk + h) - tk) / h;
    if (!(hi > lo)) continue;
    const double right = 0.5 * (hi * hi - lo * lo);   // int u du
    const double left = (hi - lo) - right;            // int (1 - u) du
    nw.weights[k - ka] += h * left;
    nw.weights[k - ka + 1] += h * right;
  }
  return nw;
}

namespace {

constexpr double kCoincidence = 1e-14;

double pair_kernel(double r, double gamma) {
  if (gamma == 0.0) return std::log(std::numbers::e / std::min(r, 1.0));
  return std::pow(r, -gamma);
}

} // namespace

EnergyValue energy_integral(const SamplePath& path, double gamma, std::span<const double, 2> window) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("energy order must be >= 0");
  const NodeWeights nw = node_weights(path.grid(), window[0], window[1]);
  const std::size_t m = nw.weights.size();
  EnergyValue out;
  out.gamma = gamma;
  out.diagonal_cut = path.grid().spacing();
  double scale = 0.0;
  for (double v : path.values()) scale = std::max(scale, std::abs(v));
  const double coincide = kCoincidence * std::max(1.0, scale);

  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double wi = nw.weights[i];
    if (wi == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double wj = nw.weights[j];
      if (wj == 0.0) continue;
      const double r = distance(path, nw.first + i, nw.first + j);
      if (r <= coincide) {
        out.value = std::numeric_limits<double>::infinity();
        return out;
      }
      row += wj * pair_kernel(r, gamma);
    }
    total += wi * row;
  }
  out.value = 2.0 * total;
  return out;
}

std::vector<double> energy_lag_bands(const SamplePath& path, double gamma, std::span<const double, 2> window) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("energy order must be >= 0");
  const NodeWeights nw = node_weights(path.grid(), window[0], window[1]);
  const std::size_t m = nw.weights.size();
  const double length = window[1] - window[0];
  const double dt = path.grid().spacing();
  if (!(length > 0.0) || m < 2) return {};
  const auto n_bands = static_cast<std::size_t>(std::floor(std::log2(length / dt))) + 1;
  // Band of each index lag, computed once.
  std::vector<std::size_t> band(m);
  for (std::size_t l = 1; l < m; ++l) {
    const double ratio = length / (static_cast<double>(l) * dt);
    band[l] = std::min(n_bands - 1, static_cast<std::size_t>(std::max(0.0, std::floor(std::log2(ratio * (1.0 + 1e-12))))));
  }
  double scale = 0.0;
  for (double v : path.values()) scale = std::max(scale, std::abs(v));
  const double coincide = kCoincidence * std::max(1.0, scale);

  std::vector<double> out(n_bands, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double wi = nw.weights[i];
    if (wi == 0.0) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double wj = nw.weights[j];
      if (wj == 0.0) continue;
      const double r = distance(path, nw.first + i, nw.first + j);
      const double k = r <= coincide ? std::numeric_limits<double>::infinity() : pair_kernel(r, gamma);
      out[band[j - i]] += 2.0 * wi * wj * k;
    }
  }
  return out;
}

MuMeasure mu_measure(const SamplePath& path, std::span<const double> level, double n, double gamma,
                     std::span<const double, 2> window) {
  if (level.size() != path.dim()) throw InvalidArgument("level has the wrong dimension");
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("mollifier index n must be positive");
  if (!(gamma >= 0.0)) throw InvalidArgument("energy order must be >= 0");
  if (!(window[0] > 0.0)) throw InvalidArgument("mu_n is taken on [eps, t] with eps > 0");
  const NodeWeights nw = node_weights(path.grid(), window[0], window[1]);
  const std::size_t m = nw.weights.size();
  const double norm = std::pow(2.0 * std::numbers::pi * n, 0.5 * static_cast<double>(path.dim()));

  std::vector<double> g(m);
  MuMeasure out;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < path.dim(); ++c) {
      const double v = path(nw.first + i, c) - level[c];
      s += v * v;
    }
    g[i] = nw.weights[i] * norm * std::exp(-0.5 * n * s);
    out.mass += g[i];
  }

  std::vector<double> lag_kernel(m);
  const double h = path.grid().spacing();
  for (std::size_t k = 1; k < m; ++k) lag_kernel[k] = std::pow(static_cast<double>(k) * h, -gamma);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (g[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = i + 1; j < m; ++j) row += g[j] * lag_kernel[j - i];
    total += g[i] * row;
  }
  out.gamma_energy = 2.0 * total;
  return out;
}

} // namespace fracdim
