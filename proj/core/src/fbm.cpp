#include "fracdim/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include "fracdim/error.hpp"
#include "fracdim/rng.hpp"

namespace fracdim {

// ---------------------------------------------------------------------------
// HurstParam / TimeGrid / SamplePath

HurstParam::HurstParam(double value) : value_(value) {
  if (!(value > 0.25 && value < 1.0)) {
    std::ostringstream os;
    os << "hurst must lie in (0.25, 1), got " << value;
    throw InvalidArgument(os.str());
  }
}

TimeGrid::TimeGrid(std::size_t n_points, double t_start, double t_end)
    : n_points_(n_points), t_start_(t_start), t_end_(t_end), spacing_(0.0) {
  if (n_points < 2) throw InvalidArgument("time grid needs at least 2 points");
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || t_start < 0.0 || !(t_end > t_start))
    throw InvalidArgument("time grid requires 0 <= t_start < t_end");
  spacing_ = (t_end - t_start) / static_cast<double>(n_points - 1);
  if (!(spacing_ > 0.0)) throw InvalidArgument("time grid spacing underflows");
}

double TimeGrid::time(std::size_t i) const noexcept {
  if (i + 1 == n_points_) return t_end_;
  return t_start_ + static_cast<double>(i) * spacing_;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(n_points_);
  for (std::size_t i = 0; i < n_points_; ++i) out[i] = time(i);
  return out;
}

std::size_t TimeGrid::nearest_index(double t) const noexcept {
  const double x = std::round((t - t_start_) / spacing_);
  if (!(x > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(x), n_points_ - 1);
}

SamplePath::SamplePath(TimeGrid grid, std::size_t dim, std::vector<double> values,
                       std::optional<HurstParam> hurst, std::optional<std::uint64_t> seed)
    : grid_(grid), dim_(dim), values_(std::move(values)), hurst_(hurst), seed_(seed) {
  if (dim_ == 0) throw InvalidArgument("path dimension must be positive");
  if (values_.size() != grid_.n_points() * dim_)
    throw InvalidArgument("path value count does not match grid size times dimension");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("path contains a non-finite value");
}

SamplePath SamplePath::subsample(std::size_t stride) const {
  const std::size_t n = size();
  if (stride == 0 || (n - 1) % stride != 0)
    throw InvalidArgument("subsample stride must divide the number of intervals");
  const std::size_t m = (n - 1) / stride + 1;
  std::vector<double> out;
  out.reserve(m * dim_);
  for (std::size_t i = 0; i < n; i += stride) {
    auto p = point(i);
    out.insert(out.end(), p.begin(), p.end());
  }
  return SamplePath(TimeGrid(m, grid_.t_start(), grid_.t_end()), dim_, std::move(out), hurst_,
                    seed_);
}

SamplePath SamplePath::slice(std::size_t first, std::size_t last) const {
  if (!(first < last) || last >= size()) throw InvalidArgument("invalid slice bounds");
  std::vector<double> out(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                          values_.begin() + static_cast<std::ptrdiff_t>((last + 1) * dim_));
  return SamplePath(TimeGrid(last - first + 1, grid_.time(first), grid_.time(last)), dim_,
                    std::move(out), hurst_, seed_);
}

// ---------------------------------------------------------------------------
// Covariance and kernel

double covariance(double s, double t, HurstParam h) {
  if (!(s >= 0.0) || !(t >= 0.0) || !std::isfinite(s) || !std::isfinite(t))
    throw InvalidArgument("covariance requires finite nonnegative times");
  const double two_h = 2.0 * h.value();
  if (s == t) return std::pow(s, two_h);
  if (h.value() == 0.5) return std::min(s, t);
  return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::abs(t - s), two_h));
}

KernelConstants kernel_constants(HurstParam h) {
  const double H = h.value();
  if (H == 0.5) return {1.0, 0.0};
  if (H > 0.5) {
    const double c = std::sqrt(H * (2.0 * H - 1.0) / std::beta(2.0 - 2.0 * H, H - 0.5));
    return {c, 0.0};
  }
  const double c = std::sqrt(2.0 * H / ((1.0 - 2.0 * H) * std::beta(1.0 - 2.0 * H, H + 0.5)));
  return {c, (0.5 - H) * c};
}

namespace {

// int_s^t (u-s)^{a-1} u^{e} du for a in (0,1): substituting w = (u-s)^a leaves
// the smooth integrand (s + w^{1/a})^e / a on [0, (t-s)^a].
double singular_power_integral(double s, double t, double a, double e) {
  const double upper = std::pow(t - s, a);
  auto f = [s, a, e](double w) { return std::pow(s + std::pow(w, 1.0 / a), e); };
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 15, 1e-13);
  return v / a;
}

} // namespace

double kernel_kh(double t, double s, HurstParam h) {
  if (!(s > 0.0) || !(s < t) || !std::isfinite(t))
    throw InvalidArgument("kernel_kh requires 0 < s < t");
  const double H = h.value();
  if (H == 0.5) return 1.0;
  const auto c = kernel_constants(h);
  if (H > 0.5) {
    const double a = H - 0.5;
    return c.c1 * std::pow(s, -a) * singular_power_integral(s, t, a, a);
  }
  const double lead = c.c1 * std::pow(s / t, 0.5 - H) * std::pow(t - s, H - 0.5);
  const double tail = c.c2 * std::pow(s, 0.5 - H) * singular_power_integral(s, t, H + 0.5, H - 1.5);
  return lead + tail;
}

double fgn_autocovariance(std::size_t k, HurstParam h) {
  const double two_h = 2.0 * h.value();
  const double x = static_cast<double>(k);
  if (k == 0) return 1.0;
  return 0.5 * (std::pow(x + 1.0, two_h) - 2.0 * std::pow(x, two_h) + std::pow(x - 1.0, two_h));
}

// ---------------------------------------------------------------------------
// CovarianceGrid

CovarianceGrid::CovarianceGrid(TimeGrid grid, Eigen::MatrixXd entries, Eigen::MatrixXd lower,
                               double jitter)
    : grid_(grid), first_(grid.t_start() == 0.0 ? 1 : 0), entries_(std::move(entries)),
      lower_(std::move(lower)), jitter_(jitter) {
  const auto m = static_cast<Eigen::Index>(grid_.n_points() - first_);
  if (entries_.rows() != m || entries_.cols() != m)
    throw InvalidArgument("covariance matrix shape does not match grid");
}

double CovarianceGrid::at(std::size_t i, std::size_t j) const noexcept {
  if (i < first_ || j < first_) return 0.0;
  return entries_(static_cast<Eigen::Index>(i - first_), static_cast<Eigen::Index>(j - first_));
}

CovarianceGrid build_covariance_grid(const TimeGrid& grid, HurstParam h) {
  const std::size_t first = grid.t_start() == 0.0 ? 1 : 0;
  const std::size_t m = grid.n_points() - first;
  if (m > kCholeskyMaxN) throw InvalidArgument("grid too large for dense covariance");
  Eigen::MatrixXd cov(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const double ti = grid.time(i + first);
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = covariance(ti, grid.time(j + first), h);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }

  const double jitter_unit = kJitterScale * cov.trace() / static_cast<double>(m);
  double jitter = 0.0;
  for (int round = 0; round <= kMaxJitterRounds; ++round) {
    Eigen::MatrixXd a = cov;
    if (jitter > 0.0) a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      return CovarianceGrid(grid, std::move(cov), std::move(lower), jitter);
    }
    jitter += jitter_unit;
  }
  throw SynthesisError("covariance matrix is not positive definite after jitter repair");
}

// ---------------------------------------------------------------------------
// Cholesky sampler

CholeskySampler::CholeskySampler(const TimeGrid& grid, HurstParam h)
    : hurst_(h), cov_(build_covariance_grid(grid, h)) {}

SamplePath CholeskySampler::sample(std::size_t dim, std::uint64_t seed) const {
  if (dim == 0) throw InvalidArgument("dimension must be positive");
  const auto& grid = cov_.grid();
  const std::size_t n = grid.n_points();
  const std::size_t first = cov_.first();
  const auto m = cov_.lower().rows();
  std::vector<double> values(n * dim, 0.0);
  Eigen::VectorXd z(m);
  for (std::size_t c = 0; c < dim; ++c) {
    auto rng = CounterRng::substream(seed, c);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(rng);
    const Eigen::VectorXd x = cov_.lower().triangularView<Eigen::Lower>() * z;
    for (Eigen::Index i = 0; i < m; ++i) values[(static_cast<std::size_t>(i) + first) * dim + c] = x(i);
  }
  return SamplePath(grid, dim, std::move(values), hurst_, seed);
}

// ---------------------------------------------------------------------------
// Circulant sampler

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

fftw_plan make_forward_plan(std::size_t n) {
  FftwBuffer in(n), out(n);
  std::lock_guard lock(fftw_planner_mutex());
  return fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data, FFTW_FORWARD, FFTW_ESTIMATE);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

} // namespace

struct CirculantSampler::Impl {
  TimeGrid grid;
  HurstParam hurst;
  std::size_t n_increments = 0;
  std::size_t m = 0;
  bool clipped = false;
  std::vector<double> sqrt_eig; // sqrt(lambda_k / m)
  fftw_plan plan = nullptr;

  Impl(const TimeGrid& g, HurstParam h) : grid(g), hurst(h) {}
  ~Impl() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }

  // Returns false if the embedding has too much negative spectral mass.
  bool build(std::size_t half) {
    m = 2 * half;
    FftwBuffer in(m), out(m);
    for (std::size_t j = 0; j <= half; ++j) {
      in.data[j][0] = fgn_autocovariance(j, hurst);
      in.data[j][1] = 0.0;
    }
    for (std::size_t j = 1; j < half; ++j) {
      in.data[m - j][0] = in.data[j][0];
      in.data[m - j][1] = 0.0;
    }
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    plan = make_forward_plan(m);
    fftw_execute_dft(plan, in.data, out.data);

    double total = 0.0, negative = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double lam = out.data[k][0];
      total += std::abs(lam);
      if (lam < 0.0) negative += -lam;
    }
    if (negative > kNegativeEigenvalueTolerance * total) return false;
    clipped = negative > 0.0;
    sqrt_eig.resize(m);
    for (std::size_t k = 0; k < m; ++k)
      sqrt_eig[k] = std::sqrt(std::max(out.data[k][0], 0.0) / static_cast<double>(m));
    return true;
  }
};

CirculantSampler::CirculantSampler(const TimeGrid& grid, HurstParam h)
    : impl_(std::make_unique<Impl>(grid, h)) {
  if (grid.t_start() != 0.0) throw InvalidArgument("circulant synthesis requires a grid starting at 0");
  impl_->n_increments = grid.n_points() - 1;
  const std::size_t half = next_pow2(impl_->n_increments);
  if (!impl_->build(half) && !impl_->build(2 * half))
    throw SynthesisError("circulant embedding has negative eigenvalues after doubling");
}

CirculantSampler::~CirculantSampler() = default;
CirculantSampler::CirculantSampler(CirculantSampler&&) noexcept = default;
CirculantSampler& CirculantSampler::operator=(CirculantSampler&&) noexcept = default;

std::size_t CirculantSampler::embedding_size() const noexcept { return impl_->m; }
bool CirculantSampler::clipped() const noexcept { return impl_->clipped; }

void CirculantSampler::sample_noise(std::uint64_t seed, std::size_t component,
                                    std::span<double> out) const {
  const auto& d = *impl_;
  if (out.size() != d.n_increments) throw InvalidArgument("noise buffer has wrong length");
  FftwBuffer in(d.m), res(d.m);
  auto rng = CounterRng::substream(seed, component);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < d.m; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    in.data[k][0] = d.sqrt_eig[k] * re;
    in.data[k][1] = d.sqrt_eig[k] * im;
  }
  fftw_execute_dft(d.plan, in.data, res.data);
  for (std::size_t j = 0; j < d.n_increments; ++j) out[j] = res.data[j][0];
}

SamplePath CirculantSampler::sample(std::size_t dim, std::uint64_t seed) const {
  if (dim == 0) throw InvalidArgument("dimension must be positive");
  const auto& d = *impl_;
  const std::size_t n = d.grid.n_points();
  const double scale = std::pow(d.grid.spacing(), d.hurst.value());
  std::vector<double> values(n * dim, 0.0);
  std::vector<double> noise(d.n_increments);
  for (std::size_t c = 0; c < dim; ++c) {
    sample_noise(seed, c, noise);
    double acc = 0.0;
    for (std::size_t j = 0; j < d.n_increments; ++j) {
      acc += scale * noise[j];
      values[(j + 1) * dim + c] = acc;
    }
  }
  return SamplePath(d.grid, dim, std::move(values), d.hurst, seed);
}

SamplePath generate_cholesky(const TimeGrid& grid, std::size_t dim, HurstParam h,
                             std::uint64_t seed) {
  return CholeskySampler(grid, h).sample(dim, seed);
}

SamplePath generate_circulant(const TimeGrid& grid, std::size_t dim, HurstParam h,
                              std::uint64_t seed) {
  return CirculantSampler(grid, h).sample(dim, seed);
}

FbmGenerator::FbmGenerator(GeneratorKind kind, const TimeGrid& grid, HurstParam h) : kind_(kind) {
  if (kind == GeneratorKind::cholesky)
    cholesky_.emplace(grid, h);
  else
    circulant_.emplace(grid, h);
}

SamplePath FbmGenerator::sample(std::size_t dim, std::uint64_t seed) const {
  return cholesky_ ? cholesky_->sample(dim, seed) : circulant_->sample(dim, seed);
}

} // namespace fracdim
