#pragma once

// Fractional Brownian motion: covariance, Volterra kernel and exact path
// synthesis on uniform grids.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fracdim {

/// Hurst index restricted to (1/4, 1), the regime where a level-3 rough-path
/// lift exists.
class HurstParam {
public:
  explicit HurstParam(double value);
  double value() const noexcept { return value_; }
  friend bool operator==(const HurstParam&, const HurstParam&) = default;

private:
  double value_;
};

/// Uniform grid t_start = t_0 < ... < t_{n-1} = t_end.
class TimeGrid {
public:
  TimeGrid(std::size_t n_points, double t_start, double t_end);

  /// n points on [0, 1].
  static TimeGrid unit(std::size_t n_points) { return TimeGrid(n_points, 0.0, 1.0); }

  std::size_t n_points() const noexcept { return n_points_; }
  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  double spacing() const noexcept { return spacing_; }
  double time(std::size_t i) const noexcept;
  std::vector<double> times() const;

  /// Grid index nearest to t, clamped to the grid.
  std::size_t nearest_index(double t) const noexcept;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  std::size_t n_points_;
  double t_start_;
  double t_end_;
  double spacing_;
};

/// A d-dimensional path sampled on a TimeGrid; values are time-major
/// (row i holds the d coordinates at grid point i).
class SamplePath {
public:
  SamplePath(TimeGrid grid, std::size_t dim, std::vector<double> values,
             std::optional<HurstParam> hurst = std::nullopt,
             std::optional<std::uint64_t> seed = std::nullopt);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return grid_.n_points(); }
  const std::optional<HurstParam>& hurst() const noexcept { return hurst_; }
  const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  double operator()(std::size_t i, std::size_t c) const noexcept {
    return values_[i * dim_ + c];
  }

  /// Every stride-th point; (n-1) must be divisible by stride.
  SamplePath subsample(std::size_t stride) const;

  /// Points first..last inclusive, on the matching sub-grid.
  SamplePath slice(std::size_t first, std::size_t last) const;

  friend bool operator==(const SamplePath&, const SamplePath&) = default;

private:
  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> values_;
  std::optional<HurstParam> hurst_;
  std::optional<std::uint64_t> seed_;
};

/// R(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double covariance(double s, double t, HurstParam h);

/// Volterra kernel K_H(t,s), 0 < s < t, with B_t = int_0^t K_H(t,s) dW_s.
double kernel_kh(double t, double s, HurstParam h);

/// Normalizing constants of kernel_kh. For H > 1/2 only `c1` is used; for
/// H <= 1/2 the kernel is c1 (s/t)^{1/2-H}(t-s)^{H-1/2} + c2 s^{1/2-H} int(...).
struct KernelConstants {
  double c1;
  double c2;
};
KernelConstants kernel_constants(HurstParam h);

/// Autocovariance of unit-spacing fractional Gaussian noise at lag k.
double fgn_autocovariance(std::size_t k, HurstParam h);

/// Covariance matrix over the positive points of a grid. A grid starting at
/// 0 has its first row dropped (the process is pinned there); `at` still
/// answers for every grid index and returns 0 on the pinned point.
class CovarianceGrid {
public:
  CovarianceGrid(TimeGrid grid, Eigen::MatrixXd entries, Eigen::MatrixXd lower,
                 double jitter);

  const TimeGrid& grid() const noexcept { return grid_; }
  /// Index of the first grid point carried by `entries`.
  std::size_t first() const noexcept { return first_; }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  /// Cholesky factor of entries + jitter * I.
  const Eigen::MatrixXd& lower() const noexcept { return lower_; }
  /// Diagonal jitter that was required to factor; 0 for clean matrices.
  double jitter() const noexcept { return jitter_; }

  double at(std::size_t i, std::size_t j) const noexcept;

private:
  TimeGrid grid_;
  std::size_t first_;
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd lower_;
  double jitter_;
};

inline constexpr std::size_t kCholeskyMaxN = 8192;
inline constexpr double kPsdTolerance = -1e-10;
inline constexpr double kJitterScale = 1e-12;
inline constexpr int kMaxJitterRounds = 3;
inline constexpr double kNegativeEigenvalueTolerance = 1e-8;

/// Builds and factors the covariance matrix; throws SynthesisError when the
/// jitter budget is exhausted.
CovarianceGrid build_covariance_grid(const TimeGrid& grid, HurstParam h);

/// Exact sampler by Cholesky factorization; the factor is computed once and
/// reused across draws.
class CholeskySampler {
public:
  CholeskySampler(const TimeGrid& grid, HurstParam h);

  SamplePath sample(std::size_t dim, std::uint64_t seed) const;
  const CovarianceGrid& covariance() const noexcept { return cov_; }

private:
  HurstParam hurst_;
  CovarianceGrid cov_;
};

/// Davies-Harte circulant embedding of fractional Gaussian noise. The
/// spectrum is computed once; each draw costs one FFT per component.
class CirculantSampler {
public:
  CirculantSampler(const TimeGrid& grid, HurstParam h);
  ~CirculantSampler();
  CirculantSampler(CirculantSampler&&) noexcept;
  CirculantSampler& operator=(CirculantSampler&&) noexcept;

  SamplePath sample(std::size_t dim, std::uint64_t seed) const;

  /// Fractional Gaussian noise increments (unit spacing) for one component.
  void sample_noise(std::uint64_t seed, std::size_t component, std::span<double> out) const;

  std::size_t embedding_size() const noexcept;
  /// True when small negative eigenvalues were clipped to zero.
  bool clipped() const noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SamplePath generate_cholesky(const TimeGrid& grid, std::size_t dim, HurstParam h,
                             std::uint64_t seed);
SamplePath generate_circulant(const TimeGrid& grid, std::size_t dim, HurstParam h,
                              std::uint64_t seed);

enum class GeneratorKind { cholesky, circulant };

/// Either sampler behind one interface, for ensemble drivers.
class FbmGenerator {
public:
  FbmGenerator(GeneratorKind kind, const TimeGrid& grid, HurstParam h);
  SamplePath sample(std::size_t dim, std::uint64_t seed) const;
  GeneratorKind kind() const noexcept { return kind_; }

private:
  GeneratorKind kind_;
  std::optional<CholeskySampler> cholesky_;
  std::optional<CirculantSampler> circulant_;
};

} // namespace fracdim
