#include "fracdim/rde.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fracdim/error.hpp"

namespace fracdim {

SchemeKind scheme_for(HurstParam h) noexcept {
  return h.value() > 1.0 / 3.0 ? SchemeKind::step2_davie : SchemeKind::step3;
}

void validate_scheme(SchemeKind kind, HurstParam h) {
  if (kind == SchemeKind::step2_davie && !(h.value() > 1.0 / 3.0))
    throw InvalidArgument("step2_davie requires H > 1/3; use step3");
}

std::size_t scheme_depth(SchemeKind kind) noexcept {
  return kind == SchemeKind::step2_davie ? 2 : 3;
}

EllipticityReport check_ellipticity(const VectorFieldSet& fields, double lambda,
                                    std::span<const Eigen::VectorXd> sample_points) {
  if (fields.dim_state() != fields.dim_noise())
    throw InvalidArgument("uniform ellipticity forces n = d; these fields have n = " +
                          std::to_string(fields.dim_state()) +
                          ", d = " + std::to_string(fields.dim_noise()));
  if (!(lambda > 0.0)) throw InvalidArgument("ellipticity constant must be positive");
  if (sample_points.empty()) throw InvalidArgument("ellipticity check needs sample points");

  EllipticityReport rep;
  rep.lambda_min_observed = std::numeric_limits<double>::infinity();
  FieldEval e = fields.make_buffer();
  for (const auto& x : sample_points) {
    fields.evaluate_into(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), 0, e);
    const Eigen::MatrixXd vvt = e.sigma * e.sigma.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(vvt, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    rep.eigenvalues.push_back(lmin);
    rep.sample_points.push_back(x);
    rep.lambda_min_observed = std::min(rep.lambda_min_observed, lmin);
  }
  rep.pass = rep.lambda_min_observed >= lambda;
  return rep;
}

namespace {

// Scratch for one step; sized once per solve.
struct StepWork {
  Eigen::VectorXd dx;
  std::vector<Eigen::VectorXd> u; // d or d*d auxiliary vectors
};

void add_level2(const FieldEval& e, std::span<const double> b2, std::size_t d,
                Eigen::VectorXd& dx, std::vector<Eigen::VectorXd>& u) {
  // sum_{i,j} B^{ij} DV_j V_i = sum_j DV_j u_j,  u_j = sum_i B^{ij} V_i
  for (std::size_t j = 0; j < d; ++j) {
    u[j].setZero();
    for (std::size_t i = 0; i < d; ++i) {
      const double w = b2[i * d + j];
      if (w != 0.0) u[j].noalias() += w * e.sigma.col(static_cast<Eigen::Index>(i));
    }
    dx.noalias() += e.jacobian[j] * u[j];
  }
}

void add_level3(const FieldEval& e, std::span<const double> b3, std::size_t d,
                Eigen::VectorXd& dx, std::vector<Eigen::VectorXd>& u) {
  // sum_{i,j,k} B^{ijk} (D^2 V_k[V_i, V_j] + DV_k DV_j V_i)
  //   = sum_k sum_j ( u_jk^T H_k^a V_j  +  DV_k DV_j u_jk ),  u_jk = sum_i B^{ijk} V_i
  const auto n = e.sigma.rows();
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) {
      auto& ujk = u[j * d + k];
      ujk.setZero();
      for (std::size_t i = 0; i < d; ++i) {
        const double w = b3[(i * d + j) * d + k];
        if (w != 0.0) ujk.noalias() += w * e.sigma.col(static_cast<Eigen::Index>(i));
      }
    }
  for (std::size_t k = 0; k < d; ++k) {
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& ujk = u[j * d + k];
      const auto vj = e.sigma.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index a = 0; a < n; ++a)
        dx(a) += ujk.dot(e.hessian[k][static_cast<std::size_t>(a)] * vj);
      inner.noalias() += e.jacobian[j] * ujk;
    }
    dx.noalias() += e.jacobian[k] * inner;
  }
}

} // namespace

SamplePath solve(const VectorFieldSet& fields, std::span<const double> x0,
                 const SignaturePath& driver, SolverScheme scheme) {
  const std::size_t n = fields.dim_state();
  const std::size_t d = fields.dim_noise();
  if (x0.size() != n) throw InvalidArgument("initial state has wrong dimension");
  if (driver.dim() != d) throw InvalidArgument("driver dimension does not match the fields");
  const std::size_t depth = scheme_depth(scheme.kind);
  if (driver.depth() < depth)
    throw InvalidArgument("driver signature depth is too shallow for the scheme");
  if (scheme.step_count != 0 && scheme.step_count != driver.intervals())
    throw InvalidArgument("scheme step count does not match the driver grid");
  const int order = scheme.kind == SchemeKind::step3 ? 2 : 1;
  if (order > fields.smoothness_order())
    throw InvalidArgument("fields are not smooth enough for the requested scheme");

  const std::size_t steps = driver.intervals();
  const double dt = driver.grid().spacing();
  std::vector<double> values((steps + 1) * n);
  std::copy(x0.begin(), x0.end(), values.begin());

  FieldEval e = fields.make_buffer();
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd dx(static_cast<Eigen::Index>(n));
  std::vector<Eigen::VectorXd> u(d * d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));

  for (std::size_t k = 0; k < steps; ++k) {
    const auto& inc = driver.increment(k);
    fields.evaluate_into(std::span<const double>(x.data(), n), order, e);

    auto b1 = inc.level(1);
    dx.noalias() = e.sigma * Eigen::Map<const Eigen::VectorXd>(b1.data(), static_cast<Eigen::Index>(d));
    dx.noalias() += dt * e.drift;

    add_level2(e, inc.level(2), d, dx, u);
    // Pure-drift Taylor term of the same order; mixed drift/noise terms are
    // below scheme order and omitted.
    dx.noalias() += (0.5 * dt * dt) * (e.drift_jacobian * e.drift);

    if (order == 2) {
      add_level3(e, inc.level(3), d, dx, u);
      Eigen::VectorXd h0(static_cast<Eigen::Index>(n));
      for (std::size_t a = 0; a < n; ++a)
        h0(static_cast<Eigen::Index>(a)) = e.drift.dot(e.drift_hessian[a] * e.drift);
      dx.noalias() += (dt * dt * dt / 6.0) * (h0 + e.drift_jacobian * (e.drift_jacobian * e.drift));
    }

    x += dx;
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      if (!std::isfinite(x(a)) || std::abs(x(a)) > kOverflowGuard) {
        std::ostringstream os;
        os << "solution left the overflow guard (|X| > " << kOverflowGuard << ") at step " << k + 1
           << " of " << steps;
        throw SolverError(os.str(), k + 1);
      }
    }
    std::copy(x.data(), x.data() + n, values.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
  }
  return SamplePath(driver.grid(), n, std::move(values));
}

ConvergenceProbe convergence_probe(const VectorFieldSet& fields, std::span<const double> x0,
                                   HurstParam h, std::uint64_t seed, std::size_t levels,
                                   const ProbeOptions& options) {
  if (levels < 3) throw InvalidArgument("convergence probe needs at least 3 levels");
  validate_scheme(options.scheme, h);
  const std::size_t finest_log2 = options.coarsest_log2 + levels - 1;
  const std::size_t fine_intervals = std::size_t{1} << finest_log2;
  const TimeGrid grid = TimeGrid::unit(fine_intervals + 1);
  const SamplePath driver_path =
      FbmGenerator(options.generator, grid, h).sample(fields.dim_noise(), seed);
  const SignaturePath fine = lift_path(driver_path, scheme_depth(options.scheme));
  const SamplePath reference = solve(fields, x0, fine, {options.scheme, 0});

  ConvergenceProbe out;
  const std::size_t n = fields.dim_state();
  for (std::size_t j = options.coarsest_log2; j < finest_log2; ++j) {
    const std::size_t stride = fine_intervals >> j;
    const SamplePath coarse = solve(fields, x0, fine.coarsen(stride), {options.scheme, 0});
    double err = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
      for (std::size_t c = 0; c < n; ++c)
        err = std::max(err, std::abs(coarse(i, c) - reference(i * stride, c)));
    out.levels.push_back({std::size_t{1} << j, err});
  }
  for (std::size_t k = 0; k + 1 < out.levels.size(); ++k) {
    const double a = out.levels[k].error, b = out.levels[k + 1].error;
    out.log2_ratios.push_back(a > 0.0 && b > 0.0 ? std::log2(a / b)
                                                 : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

} // namespace fracdim
