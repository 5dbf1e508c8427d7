#pragma once

// Truncated tensor algebra T^N(R^d) for N <= 3, signatures of piecewise
// linear paths, Chen concatenation and the p-variation functionals.

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracdim/fbm.hpp"

namespace fracdim {

inline constexpr std::size_t kMaxSignatureDepth = 3;

/// Element of T^N(R^d): levels 0..N, level m holding d^m coefficients in
/// row-major multi-index order (i_1, ..., i_m).
class TruncatedTensor {
public:
  /// Zero in every level, including level 0.
  TruncatedTensor(std::size_t dim, std::size_t depth);

  static TruncatedTensor identity(std::size_t dim, std::size_t depth);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t depth() const noexcept { return depth_; }

  std::span<double> level(std::size_t m) noexcept {
    return {data_.data() + offsets_[m], offsets_[m + 1] - offsets_[m]};
  }
  std::span<const double> level(std::size_t m) const noexcept {
    return {data_.data() + offsets_[m], offsets_[m + 1] - offsets_[m]};
  }
  std::span<const double> coefficients() const noexcept { return data_; }
  std::span<double> coefficients() noexcept { return data_; }

  friend bool operator==(const TruncatedTensor&, const TruncatedTensor&) = default;

private:
  std::size_t dim_;
  std::size_t depth_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// exp(increment) truncated at `depth`: the signature of a straight segment.
TruncatedTensor segment_signature(std::span<const double> increment, std::size_t depth);

/// Truncated tensor product a (x) b.
TruncatedTensor chen_concat(const TruncatedTensor& a, const TruncatedTensor& b);

/// Same as chen_concat, writing into a preallocated tensor of matching shape.
/// `out` must not alias `a` or `b`.
void chen_concat_into(const TruncatedTensor& a, const TruncatedTensor& b, TruncatedTensor& out);

/// max_m |level_m|^{1/m}; a homogeneous norm equivalent to Carnot-Caratheodory.
double homogeneous_norm(const TruncatedTensor& a);

/// Signature depth needed to lift fBm of index H: 2 above 1/3, 3 otherwise.
std::size_t required_depth(HurstParam h) noexcept;

/// Per-interval segment signatures of a sampled path viewed as piecewise
/// linear.
class SignaturePath {
public:
  SignaturePath(TimeGrid grid, std::size_t dim, std::size_t depth,
                std::vector<TruncatedTensor> increments);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t intervals() const noexcept { return increments_.size(); }
  const TruncatedTensor& increment(std::size_t k) const noexcept { return increments_[k]; }
  const std::vector<TruncatedTensor>& increments() const noexcept { return increments_; }

  /// Chen product of the increments between grid indices i < j.
  TruncatedTensor over(std::size_t i, std::size_t j) const;

  /// Combines every `stride` consecutive increments; the result lives on the
  /// grid with (intervals / stride) intervals.
  SignaturePath coarsen(std::size_t stride) const;

private:
  TimeGrid grid_;
  std::size_t dim_;
  std::size_t depth_;
  std::vector<TruncatedTensor> increments_;
};

/// Rejects depth outside 1..3 and depth below required_depth for a path
/// tagged with its Hurst index.
SignaturePath lift_path(const SamplePath& path, std::size_t depth);

struct PartitionValue {
  double p = 1.0;
  double value = 0.0;
  std::vector<std::size_t> argmax_partition;
};

inline constexpr std::size_t kDpMaxPoints = 4096;

/// Supremum over sub-partitions of the grid of (sum |x_{t_i,t_{i+1}}|^p)^{1/p},
/// exact by dynamic programming. Grids with more than kDpMaxPoints intervals
/// are rejected unless `dyadic_approximation` is set, in which case partition
/// points are restricted to a dyadic sub-grid of at most kDpMaxPoints
/// intervals.
PartitionValue p_variation(const SignaturePath& sig, double p, bool dyadic_approximation = false);

/// 2-D rho-variation of the covariance over pairs of dyadic sub-partitions
/// of its grid.
double rho_variation_2d(const CovarianceGrid& cov, double rho);

/// Rectangular increment R([t_a,t_b] x [t_c,t_d]) in grid indices.
double rectangular_increment(const CovarianceGrid& cov, std::size_t a, std::size_t b,
                             std::size_t c, std::size_t d);

nlohmann::json signature_to_json(const SignaturePath& sig);

} // namespace fracdim
