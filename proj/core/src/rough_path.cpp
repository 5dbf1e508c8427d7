#include "fracdim/rough_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracdim/error.hpp"

namespace fracdim {

TruncatedTensor::TruncatedTensor(std::size_t dim, std::size_t depth)
    : dim_(dim), depth_(depth), offsets_(depth + 2, 0) {
  if (dim == 0) throw InvalidArgument("tensor dimension must be positive");
  if (depth > kMaxSignatureDepth) throw InvalidArgument("tensor depth is capped at 3");
  std::size_t size = 1;
  for (std::size_t m = 0; m <= depth; ++m) {
    offsets_[m + 1] = offsets_[m] + size;
    size *= dim;
  }
  data_.assign(offsets_.back(), 0.0);
}

TruncatedTensor TruncatedTensor::identity(std::size_t dim, std::size_t depth) {
  TruncatedTensor t(dim, depth);
  t.level(0)[0] = 1.0;
  return t;
}

TruncatedTensor segment_signature(std::span<const double> increment, std::size_t depth) {
  const std::size_t d = increment.size();
  auto t = TruncatedTensor::identity(d, depth);
  if (depth >= 1) std::copy(increment.begin(), increment.end(), t.level(1).begin());
  for (std::size_t m = 2; m <= depth; ++m) {
    auto prev = t.level(m - 1);
    auto cur = t.level(m);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t a = 0; a < prev.size(); ++a)
      for (std::size_t i = 0; i < d; ++i) cur[a * d + i] = prev[a] * increment[i] * inv_m;
  }
  return t;
}

void chen_concat_into(const TruncatedTensor& a, const TruncatedTensor& b, TruncatedTensor& out) {
  if (a.dim() != b.dim() || a.depth() != b.depth() || out.dim() != a.dim() ||
      out.depth() != a.depth())
    throw InvalidArgument("chen_concat: tensor shapes differ");
  const std::size_t depth = a.depth();
  for (std::size_t m = 0; m <= depth; ++m) {
    auto dst = out.level(m);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t k = 0; k <= m; ++k) {
      auto x = a.level(k);
      auto y = b.level(m - k);
      // (x (x) y) lands at index ix * |y| + iy in row-major multi-index order.
      for (std::size_t ix = 0; ix < x.size(); ++ix) {
        const double xv = x[ix];
        if (xv == 0.0) continue;
        double* row = dst.data() + ix * y.size();
        for (std::size_t iy = 0; iy < y.size(); ++iy) row[iy] += xv * y[iy];
      }
    }
  }
}

TruncatedTensor chen_concat(const TruncatedTensor& a, const TruncatedTensor& b) {
  TruncatedTensor out(a.dim(), a.depth());
  chen_concat_into(a, b, out);
  return out;
}

double homogeneous_norm(const TruncatedTensor& a) {
  if (std::abs(a.level(0)[0] - 1.0) > 1e-12)
    throw InvalidArgument("homogeneous_norm expects a group element (level 0 equal to 1)");
  double best = 0.0;
  for (std::size_t m = 1; m <= a.depth(); ++m) {
    double s = 0.0;
    for (double v : a.level(m)) s += v * v;
    const double norm = std::sqrt(s);
    best = std::max(best, m == 1 ? norm : std::pow(norm, 1.0 / static_cast<double>(m)));
  }
  return best;
}

std::size_t required_depth(HurstParam h) noexcept { return h.value() > 1.0 / 3.0 ? 2 : 3; }

SignaturePath::SignaturePath(TimeGrid grid, std::size_t dim, std::size_t depth,
                             std::vector<TruncatedTensor> increments)
    : grid_(grid), dim_(dim), depth_(depth), increments_(std::move(increments)) {
  if (increments_.size() + 1 != grid_.n_points())
    throw InvalidArgument("signature path needs one increment per grid interval");
  for (const auto& t : increments_)
    if (t.dim() != dim_ || t.depth() != depth_)
      throw InvalidArgument("signature increments have inconsistent shape");
}

TruncatedTensor SignaturePath::over(std::size_t i, std::size_t j) const {
  if (!(i < j) || j > intervals()) throw InvalidArgument("signature range out of bounds");
  TruncatedTensor acc = increments_[i];
  TruncatedTensor tmp(dim_, depth_);
  for (std::size_t k = i + 1; k < j; ++k) {
    chen_concat_into(acc, increments_[k], tmp);
    std::swap(acc, tmp);
  }
  return acc;
}

SignaturePath SignaturePath::coarsen(std::size_t stride) const {
  if (stride == 0 || intervals() % stride != 0)
    throw InvalidArgument("coarsen stride must divide the number of intervals");
  std::vector<TruncatedTensor> out;
  out.reserve(intervals() / stride);
  for (std::size_t k = 0; k < intervals(); k += stride) out.push_back(over(k, k + stride));
  TimeGrid grid(out.size() + 1, grid_.t_start(), grid_.t_end());
  return SignaturePath(grid, dim_, depth_, std::move(out));
}

SignaturePath lift_path(const SamplePath& path, std::size_t depth) {
  if (depth < 1 || depth > kMaxSignatureDepth) throw InvalidArgument("lift depth must be 1, 2 or 3");
  if (path.hurst() && depth < required_depth(*path.hurst()))
    throw InvalidArgument("lift depth is too shallow for the path's Hurst index");
  const std::size_t d = path.dim();
  std::vector<TruncatedTensor> incs;
  incs.reserve(path.size() - 1);
  std::vector<double> delta(d);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto a = path.point(i);
    auto b = path.point(i + 1);
    for (std::size_t c = 0; c < d; ++c) delta[c] = b[c] - a[c];
    incs.push_back(segment_signature(delta, depth));
  }
  return SignaturePath(path.grid(), d, depth, std::move(incs));
}

namespace {

double norm_power(const TruncatedTensor& t, double p) {
  return std::pow(homogeneous_norm(t), p);
}

PartitionValue p_variation_on(const SignaturePath& sig, double p) {
  const std::size_t n = sig.intervals() + 1;
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(n, 0);
  best[0] = 0.0;
  TruncatedTensor acc(sig.dim(), sig.depth());
  TruncatedTensor tmp(sig.dim(), sig.depth());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc = sig.increment(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j > i + 1) {
        chen_concat_into(acc, sig.increment(j - 1), tmp);
        std::swap(acc, tmp);
      }
      const double v = best[i] + norm_power(acc, p);
      if (v > best[j]) {
        best[j] = v;
        prev[j] = i;
      }
    }
  }
  PartitionValue out;
  out.p = p;
  out.value = std::pow(best[n - 1], 1.0 / p);
  for (std::size_t k = n - 1;; k = prev[k]) {
    out.argmax_partition.push_back(k);
    if (k == 0) break;
  }
  std::reverse(out.argmax_partition.begin(), out.argmax_partition.end());
  return out;
}

} // namespace

PartitionValue p_variation(const SignaturePath& sig, double p, bool dyadic_approximation) {
  if (!(p >= 1.0)) throw InvalidArgument("p-variation requires p >= 1");
  if (sig.intervals() <= kDpMaxPoints) return p_variation_on(sig, p);
  if (!dyadic_approximation)
    throw InvalidArgument("grid exceeds the exact p-variation limit; enable dyadic approximation");
  std::size_t stride = 1;
  while ((sig.intervals() + stride - 1) / stride > kDpMaxPoints) stride <<= 1;
  if (sig.intervals() % stride != 0)
    throw InvalidArgument("dyadic approximation needs a dyadic number of intervals");
  auto coarse = sig.coarsen(stride);
  auto out = p_variation_on(coarse, p);
  for (auto& k : out.argmax_partition) k *= stride;
  return out;
}

double rectangular_increment(const CovarianceGrid& cov, std::size_t a, std::size_t b,
                             std::size_t c, std::size_t d) {
  return cov.at(b, d) - cov.at(b, c) - cov.at(a, d) + cov.at(a, c);
}

double rho_variation_2d(const CovarianceGrid& cov, double rho) {
  if (!(rho >= 1.0)) throw InvalidArgument("rho-variation requires rho >= 1");
  const std::size_t intervals = cov.grid().n_points() - 1;
  if (intervals > kDpMaxPoints) throw InvalidArgument("covariance grid too large");
  std::vector<std::size_t> levels; // partition sizes (number of intervals)
  for (std::size_t k = 1; k <= intervals; k <<= 1)
    if (intervals % k == 0) levels.push_back(k);

  double best = 0.0;
  for (std::size_t ka : levels) {
    const std::size_t sa = intervals / ka;
    for (std::size_t kb : levels) {
      const std::size_t sb = intervals / kb;
      double sum = 0.0;
      for (std::size_t i = 0; i < ka; ++i)
        for (std::size_t j = 0; j < kb; ++j) {
          const double r = rectangular_increment(cov, i * sa, (i + 1) * sa, j * sb, (j + 1) * sb);
          sum += std::pow(std::abs(r), rho);
        }
      best = std::max(best, sum);
    }
  }
  return std::pow(best, 1.0 / rho);
}

nlohmann::json signature_to_json(const SignaturePath& sig) {
  nlohmann::json j;
  j["dim"] = sig.dim();
  j["depth"] = sig.depth();
  j["grid"] = {{"n_points", sig.grid().n_points()},
               {"t_start", sig.grid().t_start()},
               {"t_end", sig.grid().t_end()}};
  auto& arr = j["increments"] = nlohmann::json::array();
  for (const auto& inc : sig.increments()) {
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t m = 1; m <= sig.depth(); ++m) {
      auto lv = inc.level(m);
      levels.push_back(std::vector<double>(lv.begin(), lv.end()));
    }
    arr.push_back(std::move(levels));
  }
  return j;
}

} // namespace fracdim
