#include "fracdim/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fracdim/ensemble.hpp"
#include "fracdim/error.hpp"
#include "fracdim/stats.hpp"

namespace fracdim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::pair<std::size_t, std::size_t> node_range(const TimeGrid& grid, double s, double t) {
  const double tol = 1e-9 * grid.spacing();
  if (!(s < t) || s < grid.t_start() - tol || t > grid.t_end() + tol)
    throw InvalidArgument("interval must satisfy t_start <= s < t <= t_end");
  const double x0 = std::ceil((s - grid.t_start()) / grid.spacing() - 1e-9);
  const double x1 = std::floor((t - grid.t_start()) / grid.spacing() + 1e-9);
  const auto i0 = static_cast<std::size_t>(std::max(x0, 0.0));
  const auto i1 = std::min(static_cast<std::size_t>(std::max(x1, 0.0)), grid.n_points() - 1);
  if (!(i0 < i1)) throw InvalidArgument("interval holds fewer than two grid nodes");
  return {i0, i1};
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

void require_ensemble(const ExperimentSpec& spec, std::size_t minimum, const char* what) {
  if (spec.ensemble < minimum)
    throw InvalidArgument(std::string(what) + " needs an ensemble of at least " +
                          std::to_string(minimum) + ", got " + std::to_string(spec.ensemble));
}

double gaussian_log_norm(std::span<const double> bandwidth) {
  double s = 0.0;
  for (double b : bandwidth) s -= std::log(std::sqrt(2.0 * std::numbers::pi) * b);
  return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Tails

double sup_increment(const SamplePath& path, double s, double t) {
  const auto [i0, i1] = node_range(path.grid(), s, t);
  const std::size_t d = path.dim();
  if (d == 1) {
    double lo = path(i0, 0), hi = lo;
    for (std::size_t i = i0; i <= i1; ++i) {
      lo = std::min(lo, path(i, 0));
      hi = std::max(hi, path(i, 0));
    }
    return hi - lo;
  }
  double best = 0.0;
  for (std::size_t i = i0; i <= i1; ++i)
    for (std::size_t j = i + 1; j <= i1; ++j) {
      double q = 0.0;
      for (std::size_t c = 0; c < d; ++c) q += (path(j, c) - path(i, c)) * (path(j, c) - path(i, c));
      best = std::max(best, q);
    }
  return std::sqrt(best);
}

std::vector<double> sup_increment_samples(const Simulator& sim, std::size_t field_index, double s,
                                          double t, unsigned jobs) {
  return parallel_map(sim.spec().ensemble, jobs, [&](std::size_t m) {
    return sup_increment(sim.solution(m, field_index), s, t);
  });
}

TailCurve tail_curve(std::span<const double> samples, std::span<const double> xi_grid, double s, double t) {
  if (samples.empty()) throw InvalidArgument("tail curve needs samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  TailCurve curve;
  curve.xi_values.assign(xi_grid.begin(), xi_grid.end());
  std::sort(curve.xi_values.begin(), curve.xi_values.end());
  curve.ensemble_size = samples.size();
  curve.s = s;
  curve.t = t;
  bool any_finite = false;
  const double m = static_cast<double>(sorted.size());
  for (double xi : curve.xi_values) {
    const auto above = static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), xi));
    curve.log_probs.push_back(above > 0.0 ? std::log(above / m) : kNegInf);
    any_finite = any_finite || above > 0.0;
  }
  if (!any_finite) curve.warnings.push_back("no member exceeds any xi; the xi grid is too coarse");
  return curve;
}

std::vector<double> quantile_xi_grid(std::span<const double> samples, std::size_t n, double q_hi, double q_lo) {
  if (n < 2 || !(q_hi > q_lo) || !(q_lo > 0.0) || q_hi > 1.0)
    throw InvalidArgument("xi grid needs n >= 2 and 0 < q_lo < q_hi <= 1");
  std::vector<double> xi;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = q_hi * std::pow(q_lo / q_hi, static_cast<double>(k) / static_cast<double>(n - 1));
    xi.push_back(quantile(samples, 1.0 - p));
  }
  std::sort(xi.begin(), xi.end());
  xi.erase(std::unique(xi.begin(), xi.end()), xi.end());
  return xi;
}

TailCurve tail_curve_sup_increment(const ExperimentSpec& spec, double s, double t,
                                   std::span<const double> xi_grid, unsigned jobs) {
  require_ensemble(spec, 1000, "a sup-increment tail curve");
  const Simulator sim(spec);
  const auto samples = sup_increment_samples(sim, 0, s, t, jobs);
  return tail_curve(samples, xi_grid, s, t);
}

double ExponentFit::r2_of(double exponent) const {
  for (std::size_t k = 0; k < exponents.size(); ++k)
    if (std::abs(exponents[k] - exponent) < 1e-12) return r2s[k];
  throw InvalidArgument("exponent was not among the fitted candidates");
}

ExponentFit fit_tail_exponent(const TailCurve& curve, std::span<const double> candidates) {
  if (candidates.empty()) throw InvalidArgument("no candidate exponents");
  std::vector<double> xi, lp;
  for (std::size_t k = 0; k < curve.xi_values.size(); ++k)
    if (std::isfinite(curve.log_probs[k]) && curve.log_probs[k] < 0.0) {
      xi.push_back(curve.xi_values[k]);
      lp.push_back(curve.log_probs[k]);
    }
  if (xi.size() < 5)
    throw InvalidArgument("tail fit needs at least 5 points with 0 < P < 1, got " + std::to_string(xi.size()));
  ExponentFit out;
  out.points_used = xi.size();
  double best_r2 = -std::numeric_limits<double>::infinity();
  for (double a : candidates) {
    if (!(a > 0.0)) throw InvalidArgument("candidate exponents must be positive");
    std::vector<double> x(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) x[k] = std::pow(xi[k], a);
    const LinearFit f = linear_fit(x, lp);
    out.exponents.push_back(a);
    out.slopes.push_back(f.slope);
    out.intercepts.push_back(f.intercept);
    out.r2s.push_back(f.r_squared);
    if (f.r_squared > best_r2) {
      best_r2 = f.r_squared;
      out.best_exponent = a;
    }
  }
  return out;
}

TimeScaling scaling_from_samples(std::span<const std::vector<double>> samples_per_interval,
                                 std::span<const double> lengths, double xi, double hurst) {
  if (samples_per_interval.size() != lengths.size() || lengths.size() < 2)
    throw InvalidArgument("time scaling needs at least two intervals with samples");
  std::vector<std::size_t> order(lengths.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lengths[a] > lengths[b]; });

  TimeScaling out;
  const std::vector<double> grid{xi};
  for (auto k : order) {
    const TailCurve c = tail_curve(samples_per_interval[k], grid, 0.0, lengths[k]);
    out.lengths.push_back(lengths[k]);
    out.log_probs.push_back(c.log_probs.front());
  }
  for (std::size_t k = 0; k + 1 < out.log_probs.size(); ++k)
    if (!(out.log_probs[k + 1] < out.log_probs[k])) ++out.inversions;

  std::vector<double> lx, ly, score, neg;
  for (std::size_t k = 0; k < out.lengths.size(); ++k) {
    if (!std::isfinite(out.log_probs[k])) continue;
    lx.push_back(std::log(out.lengths[k]));
    ly.push_back(out.log_probs[k]);
    score.push_back(xi * xi / std::pow(out.lengths[k], 2.0 * hurst));
    neg.push_back(-out.log_probs[k]);
  }
  if (lx.size() < 2) {
    out.warnings.push_back("fewer than two intervals have exceedances at this xi");
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.rank_correlation = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.slope = linear_fit(lx, ly).slope;
  out.rank_correlation = spearman(score, neg);
  return out;
}

TimeScaling scaling_check_time(const ExperimentSpec& spec, std::span<const std::pair<double, double>> intervals,
                               double xi, unsigned jobs) {
  require_ensemble(spec, 1000, "a time-scaling check");
  if (intervals.empty()) throw InvalidArgument("no intervals given");
  for (const auto& iv : intervals)
    if (iv.first != intervals.front().first) throw InvalidArgument("intervals must share their start s");
  const Simulator sim(spec);
  // One path per member serves every interval.
  const auto per_member = parallel_map(spec.ensemble, jobs, [&](std::size_t m) {
    const SamplePath p = sim.solution(m, 0);
    std::vector<double> v;
    for (const auto& iv : intervals) v.push_back(sup_increment(p, iv.first, iv.second));
    return v;
  });
  std::vector<std::vector<double>> samples(intervals.size());
  std::vector<double> lengths;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    lengths.push_back(intervals[k].second - intervals[k].first);
    for (const auto& v : per_member) samples[k].push_back(v[k]);
  }
  return scaling_from_samples(samples, lengths, xi, spec.hurst);
}

// ---------------------------------------------------------------------------
// Kernel density estimates

std::vector<double> kde_bandwidth(std::span<const double> samples, std::size_t dim) {
  if (dim == 0 || samples.empty() || samples.size() % dim != 0)
    throw InvalidArgument("samples do not form whole points of the given dimension");
  const std::size_t m = samples.size() / dim;
  if (m < 2) throw InvalidArgument("a bandwidth needs at least two samples");
  std::vector<double> out(dim);
  std::vector<double> col(m);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < m; ++i) col[i] = samples[i * dim + c];
    const double iqr = quantile(col, 0.75) - quantile(col, 0.25);
    if (!(iqr > 0.0)) throw InvalidArgument("bandwidth collapse: coordinate " + std::to_string(c) + " has zero interquartile range");
    out[c] = 1.06 * std::sqrt(variance(col)) *
             std::pow(static_cast<double>(m), -1.0 / (4.0 + static_cast<double>(dim)));
  }
  return out;
}

namespace {

double kde_at(std::span<const double> samples, std::size_t dim, std::span<const double> bw,
              double log_norm, const double* z) {
  const std::size_t m = samples.size() / dim;
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double q = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double u = (samples[i * dim + c] - z[c]) / bw[c];
      q += u * u;
    }
    if (q < 80.0) acc += std::exp(-0.5 * q);
  }
  return std::exp(log_norm) * acc / static_cast<double>(m);
}

} // namespace

DensityEstimate kde_evaluate(std::span<const double> samples, std::size_t dim,
                             std::span<const double> centers, unsigned jobs) {
  if (centers.size() % dim != 0) throw InvalidArgument("centers do not form whole points");
  DensityEstimate est;
  est.dim = dim;
  est.bandwidth = kde_bandwidth(samples, dim);
  est.centers.assign(centers.begin(), centers.end());
  est.ensemble_size = samples.size() / dim;
  const double log_norm = gaussian_log_norm(est.bandwidth);
  est.values = parallel_map(centers.size() / dim, jobs, [&](std::size_t k) {
    return kde_at(samples, dim, est.bandwidth, log_norm, centers.data() + k * dim);
  });
  return est;
}

std::vector<double> increment_samples(const Simulator& sim, std::size_t field_index, double s,
                                      double t, unsigned jobs) {
  const TimeGrid grid = sim.spec().grid();
  const auto [is, it] = node_range(grid, s, t);
  const auto rows = parallel_map(sim.spec().ensemble, jobs, [&](std::size_t m) {
    const SamplePath p = sim.solution(m, field_index);
    std::vector<double> v(p.dim());
    for (std::size_t c = 0; c < p.dim(); ++c) v[c] = p(it, c) - p(is, c);
    return v;
  });
  return flatten(rows);
}

std::vector<double> marginal_samples(const Simulator& sim, std::size_t field_index, double t, unsigned jobs) {
  const TimeGrid grid = sim.spec().grid();
  if (t < grid.t_start() || t > grid.t_end()) throw InvalidArgument("time lies outside the grid");
  const std::size_t it = grid.nearest_index(t);
  const auto rows = parallel_map(sim.spec().ensemble, jobs, [&](std::size_t m) {
    const SamplePath p = sim.solution(m, field_index);
    auto pt = p.point(it);
    return std::vector<double>(pt.begin(), pt.end());
  });
  return flatten(rows);
}

DensityEstimate kde_increment(const ExperimentSpec& spec, double s, double t,
                              std::span<const double> centers, unsigned jobs) {
  if (s < 0.1) throw InvalidArgument("increment densities are taken on [0.1, 1]: s must be >= 0.1");
  require_ensemble(spec, 10000, "an increment density estimate");
  const Simulator sim(spec);
  const auto samples = increment_samples(sim, 0, s, t, jobs);
  DensityEstimate est = kde_evaluate(samples, spec.dim, centers, jobs);
  est.s = s;
  est.t = t;
  return est;
}

EnvelopeFit upper_envelope_fit(std::span<const double> x, std::span<const double> y, std::size_t bins) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("envelope fit needs matching non-empty data");
  if (bins == 0) throw InvalidArgument("envelope fit needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<std::vector<double>> bx(bins), by(bins);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(y[k])) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>((x[k] - lo) / width));
    bx[b].push_back(x[k]);
    by[b].push_back(y[k]);
  }
  EnvelopeFit out;
  for (std::size_t b = 0; b < bins; ++b) {
    if (by[b].empty()) continue;
    out.x.push_back(mean(bx[b]));
    out.y.push_back(quantile(by[b], 0.9));
  }
  if (out.x.size() < 3) throw InvalidArgument("envelope fit needs at least 3 occupied bins");
  const LinearFit f = linear_fit(out.x, out.y);
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r_squared = f.r_squared;
  return out;
}

EnvelopeFit increment_decay_fit(const DensityEstimate& est, double hurst, std::size_t bins) {
  const double a = std::min(2.0 * hurst + 1.0, 2.0);
  const double scale = std::pow(est.t - est.s, static_cast<double>(est.dim) * hurst);
  std::vector<double> x, y;
  for (std::size_t k = 0; k < est.values.size(); ++k) {
    if (!(est.values[k] > 0.0)) continue;
    double r2 = 0.0;
    for (std::size_t c = 0; c < est.dim; ++c) r2 += est.centers[k * est.dim + c] * est.centers[k * est.dim + c];
    x.push_back(std::pow(std::sqrt(r2), a));
    y.push_back(std::log(est.values[k] * scale));
  }
  return upper_envelope_fit(x, y, bins);
}

// ---------------------------------------------------------------------------
// Positivity

PositivityResult positivity_from_samples(std::span<const double> samples, std::size_t dim,
                                         std::span<const double> lo, std::span<const double> hi,
                                         std::size_t per_axis, unsigned jobs) {
  if (lo.size() != dim || hi.size() != dim) throw InvalidArgument("window has the wrong dimension");
  if (per_axis < 2) throw InvalidArgument("lattice needs at least 2 points per axis");
  for (std::size_t c = 0; c < dim; ++c)
    if (!(hi[c] > lo[c])) throw InvalidArgument("window must have positive width on every axis");
  std::size_t total = 1;
  for (std::size_t c = 0; c < dim; ++c) {
    total *= per_axis;
    if (total > kPositivityMaxLattice) throw InvalidArgument("lattice exceeds 10^4 points");
  }
  PositivityResult out;
  out.lattice_points = total;
  out.ensemble_size = dim == 0 ? 0 : samples.size() / dim;
  if (out.ensemble_size < 2) {
    out.verdict = "untestable";
    return out;
  }
  std::vector<double> centers(total * dim);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t idx = r % per_axis;
      r /= per_axis;
      centers[k * dim + c] = lo[c] + (hi[c] - lo[c]) * static_cast<double>(idx) / static_cast<double>(per_axis - 1);
    }
  }
  const DensityEstimate est = kde_evaluate(samples, dim, centers, jobs);
  out.min_value = *std::min_element(est.values.begin(), est.values.end());
  out.resolution_floor = std::exp(gaussian_log_norm(est.bandwidth)) / static_cast<double>(out.ensemble_size);
  if (out.ensemble_size < kPositivityMinEnsemble || out.min_value < out.resolution_floor)
    out.verdict = "untestable";
  else
    out.verdict = "positive";
  return out;
}

PositivityResult positivity_scan(const ExperimentSpec& spec, double t, std::span<const double> lo,
                                 std::span<const double> hi, std::size_t per_axis, unsigned jobs) {
  if (t < 0.1) throw InvalidArgument("positivity is scanned for t >= 0.1");
  const Simulator sim(spec);
  const auto samples = marginal_samples(sim, 0, t, jobs);
  try {
    return positivity_from_samples(samples, spec.dim, lo, hi, per_axis, jobs);
  } catch (const InvalidArgument&) {
    if (spec.ensemble >= kPositivityMinEnsemble) throw;
    PositivityResult out;
    out.ensemble_size = spec.ensemble;
    out.verdict = "untestable";
    return out;
  }
}

// ---------------------------------------------------------------------------
// Joint density of (X_s, X_t)

BivariateDecay bivariate_from_samples(std::span<const double> xs, std::span<const double> xt,
                                      std::size_t dim, double s, double t, double hurst,
                                      std::span<const double> offsets, unsigned jobs) {
  if (xs.size() != xt.size() || xs.size() % dim != 0) throw InvalidArgument("sample shapes differ");
  if (offsets.empty()) throw InvalidArgument("no offsets given");
  const std::size_t m = xs.size() / dim;
  std::vector<double> joint(m * 2 * dim);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < dim; ++c) {
      joint[i * 2 * dim + c] = xs[i * dim + c];
      joint[i * 2 * dim + dim + c] = xt[i * dim + c];
    }
  BivariateDecay out;
  out.anchor.resize(dim);
  std::vector<double> col(m);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < m; ++i) col[i] = xs[i * dim + c];
    out.anchor[c] = median(col);
  }
  std::vector<double> centers;
  for (double off : offsets) {
    centers.insert(centers.end(), out.anchor.begin(), out.anchor.end());
    for (std::size_t c = 0; c < dim; ++c) centers.push_back(out.anchor[c] + (c == 0 ? off : 0.0));
  }
  const DensityEstimate est = kde_evaluate(joint, 2 * dim, centers, jobs);
  out.gamma = 0.9 * hurst;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    out.points.push_back({offsets[k], est.values[k]});
    if (!(est.values[k] > 0.0)) continue;
    x.push_back(std::pow(std::abs(offsets[k]), 2.0 * out.gamma) /
                std::pow(t - s, 2.0 * out.gamma * out.gamma));
    y.push_back(std::log(est.values[k]));
  }
  out.envelope = upper_envelope_fit(x, y, offsets.size());
  return out;
}

BivariateDecay kde_bivariate_decay(const ExperimentSpec& spec, double s, double t,
                                   std::span<const double> offsets, unsigned jobs) {
  if (s < 0.1 || !(s < t) || t > spec.t_end) throw InvalidArgument("joint density needs 0.1 <= s < t <= 1");
  require_ensemble(spec, 10000, "a joint density estimate");
  const Simulator sim(spec);
  const TimeGrid grid = spec.grid();
  const std::size_t is = grid.nearest_index(s), it = grid.nearest_index(t);
  const auto rows = parallel_map(spec.ensemble, jobs, [&](std::size_t m) {
    const SamplePath p = sim.solution(m, 0);
    std::vector<double> v;
    auto a = p.point(is);
    auto b = p.point(it);
    v.insert(v.end(), a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    return v;
  });
  std::vector<double> xs, xt;
  for (const auto& r : rows) {
    xs.insert(xs.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(spec.dim));
    xt.insert(xt.end(), r.begin() + static_cast<std::ptrdiff_t>(spec.dim), r.end());
  }
  return bivariate_from_samples(xs, xt, spec.dim, s, t, spec.hurst, offsets, jobs);
}

// ---------------------------------------------------------------------------
// Export

std::string tail_curve_csv(const TailCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "xi,log_prob\n";
  for (std::size_t k = 0; k < curve.xi_values.size(); ++k)
    os << curve.xi_values[k] << ',' << curve.log_probs[k] << '\n';
  return os.str();
}

std::string density_csv(const DensityEstimate& est) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t c = 0; c < est.dim; ++c) os << 'z' << c + 1 << ',';
  os << "value\n";
  for (std::size_t k = 0; k < est.values.size(); ++k) {
    for (std::size_t c = 0; c < est.dim; ++c) os << est.centers[k * est.dim + c] << ',';
    os << est.values[k] << '\n';
  }
  return os.str();
}

nlohmann::json verdict_block(const std::string& theorem, double exponent, double slope, double r2,
                             const std::string& verdict) {
  return {{"theorem", theorem}, {"exponent_tested", exponent}, {"slope", slope}, {"r2", r2}, {"verdict", verdict}};
}

} // namespace fracdim
