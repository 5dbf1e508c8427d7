#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fracdim/error.hpp"
#include "fracdim/fbm.hpp"
#include "fracdim/rde.hpp"
#include "fracdim/rough_path.hpp"
#include "fracdim/stats.hpp"
#include "fracdim/vector_fields.hpp"
#include "generators.hpp"

using namespace fracdim;

namespace {

// Classical RK4 for x' = sin(x) - x/2 on [0, 1].
double rk4_drift_only(double x, std::size_t steps) {
  const auto f = [](double y) { return std::sin(y) - 0.5 * y; };
  const double h = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h * k2);
    const double k4 = f(x + h * k3);
    x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }
  return x;
}

// Sup-norm error of the scheme against X = x0 exp(B) on each coarse grid.
std::vector<double> geometric_errors(const SamplePath& fine, SchemeKind kind,
                                     const std::vector<std::size_t>& strides) {
  const auto fields = field_catalog("geometric_1d", 1);
  const auto lift = lift_path(fine, 3);
  const std::vector<double> x0{1.0};
  std::vector<double> errs;
  for (std::size_t stride : strides) {
    const auto sol = solve(fields, x0, lift.coarsen(stride), {kind, 0});
    double err = 0.0;
    for (std::size_t i = 0; i < sol.size(); ++i)
      err = std::max(err, std::abs(sol(i, 0) - std::exp(kGeometricSigma * fine(i * stride, 0))));
    errs.push_back(err);
  }
  return errs;
}

double log2_slope(const std::vector<double>& errs) {
  // Errors at step counts doubling twice per entry.
  std::vector<double> x, y;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    x.push_back(2.0 * static_cast<double>(i));
    y.push_back(std::log2(errs[i]));
  }
  return -linear_fit(x, y).slope;
}

} // namespace

TEST(Scheme, SelectionByHurst) {
  EXPECT_EQ(scheme_for(HurstParam(0.5)), SchemeKind::step2_davie);
  EXPECT_EQ(scheme_for(HurstParam(0.3)), SchemeKind::step3);
  EXPECT_THROW(validate_scheme(SchemeKind::step2_davie, HurstParam(0.3)), InvalidArgument);
  EXPECT_NO_THROW(validate_scheme(SchemeKind::step3, HurstParam(0.3)));
  EXPECT_NO_THROW(validate_scheme(SchemeKind::step3, HurstParam(0.8)));
  EXPECT_EQ(scheme_depth(SchemeKind::step2_davie), 2u);
  EXPECT_EQ(scheme_depth(SchemeKind::step3), 3u);
}

TEST(Solve, IdentityFieldsReproduceTheDriver) {
  gen::Engine g(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = gen::uniform_index(g, 1, 3);
    const auto driver = gen::random_walk(g, 128, d, 0.2);
    std::vector<double> x0 = gen::gaussian_vector(g, d);
    for (SchemeKind kind : {SchemeKind::step2_davie, SchemeKind::step3}) {
      const auto sol = solve(field_catalog("identity", d), x0, lift_path(driver, 3), {kind, 0});
      for (std::size_t i = 0; i < sol.size(); ++i)
        for (std::size_t c = 0; c < d; ++c)
          EXPECT_NEAR(sol(i, c), x0[c] + driver(i, c) - driver(0, c), 1e-12);
    }
  }
}

TEST(Solve, GeometricConvergesAtSchemeOrder) {
  // Local error of the level-2 step for exp is O(|dB|^3), so the global rate
  // is 3H - 1; the level-3 step gains one more power of H.
  const SamplePath fine = generate_circulant(TimeGrid::unit(4097), 1, HurstParam(0.5), 12);
  const std::vector<std::size_t> strides{64, 16, 4, 1};
  const auto e2 = geometric_errors(fine, SchemeKind::step2_davie, strides);
  const auto e3 = geometric_errors(fine, SchemeKind::step3, strides);
  for (std::size_t i = 1; i < e2.size(); ++i) {
    EXPECT_LT(e2[i], e2[i - 1]);
    EXPECT_LT(e3[i], e3[i - 1]);
  }
  EXPECT_GT(log2_slope(e2), 0.5 - 0.2);
  EXPECT_GT(log2_slope(e3), 1.0 - 0.2);
  EXPECT_LT(e3.back(), e2.back());
}

TEST(Solve, DriftOnlyMatchesOdeOracle) {
  const auto fields = field_catalog("drift_only", 1);
  const double oracle = rk4_drift_only(2.0, 100000);
  std::vector<double> errs;
  for (std::size_t n : {250u, 500u, 1000u}) {
    const SamplePath zero(TimeGrid::unit(n + 1), 1, std::vector<double>(n + 1, 0.0));
    const auto sol = solve(fields, std::vector<double>{2.0}, lift_path(zero, 3),
                           {SchemeKind::step2_davie, 0});
    errs.push_back(std::abs(sol(n, 0) - oracle));
  }
  EXPECT_LT(errs.back(), 1e-5);
  // Second-order Taylor in time: halving dt divides the error by about 4.
  EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.5);
  EXPECT_NEAR(errs[1] / errs[2], 4.0, 0.5);
}

TEST(Solve, DriftOnlyStep3IsThirdOrder) {
  const auto fields = field_catalog("drift_only", 1);
  const double oracle = rk4_drift_only(2.0, 100000);
  std::vector<double> errs;
  for (std::size_t n : {50u, 100u, 200u}) {
    const SamplePath zero(TimeGrid::unit(n + 1), 1, std::vector<double>(n + 1, 0.0));
    const auto sol =
        solve(fields, std::vector<double>{2.0}, lift_path(zero, 3), {SchemeKind::step3, 0});
    errs.push_back(std::abs(sol(n, 0) - oracle));
  }
  EXPECT_NEAR(errs[0] / errs[1], 8.0, 1.5);
  EXPECT_NEAR(errs[1] / errs[2], 8.0, 1.5);
}

TEST(Solve, RejectsMismatchedInputs) {
  gen::Engine g(3);
  const auto driver = lift_path(gen::random_walk(g, 16, 2), 2);
  const auto fields = field_catalog("identity", 2);
  EXPECT_THROW(solve(fields, std::vector<double>{0.0}, driver, {}), InvalidArgument);
  EXPECT_THROW(solve(field_catalog("identity", 3), std::vector<double>(3, 0.0), driver, {}),
               InvalidArgument);
  EXPECT_THROW(solve(fields, std::vector<double>(2, 0.0), driver, {SchemeKind::step3, 0}),
               InvalidArgument);
  EXPECT_THROW(solve(fields, std::vector<double>(2, 0.0), driver, {SchemeKind::step2_davie, 8}),
               InvalidArgument);
  EXPECT_NO_THROW(solve(fields, std::vector<double>(2, 0.0), driver, {SchemeKind::step2_davie, 16}));
}

TEST(Solve, OverflowGuardReportsStep) {
  std::vector<double> v(11);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 50.0 * static_cast<double>(i);
  const auto driver = lift_path(gen::path_from(1, v), 2);
  try {
    solve(field_catalog("geometric_1d", 1), std::vector<double>{1.0}, driver, {});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    // Each step multiplies by 1 + 50 + 1250; 1301^4 > 1e12.
    EXPECT_EQ(e.step(), 4u);
  }
}

TEST(Ellipticity, CatalogFields) {
  gen::Engine g(99);
  std::vector<Eigen::VectorXd> pts;
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd x(2);
    x << gen::uniform(g, -5, 5), gen::uniform(g, -5, 5);
    pts.push_back(x);
  }
  const auto id = check_ellipticity(field_catalog("identity", 2), 1.0, pts);
  EXPECT_TRUE(id.pass);
  EXPECT_NEAR(id.lambda_min_observed, 1.0, 1e-14);
  // ||0.1 S||_F <= 0.1 sqrt(d) = 0.142, so eigenvalues of V V^T stay above
  // (1 - 0.142)^2 = 0.736.
  const auto es = check_ellipticity(field_catalog("elliptic_sin_2d", 2), 0.64, pts);
  EXPECT_TRUE(es.pass);
  EXPECT_EQ(es.eigenvalues.size(), pts.size());
  EXPECT_LT(es.lambda_min_observed, 1.0);
}

TEST(Ellipticity, DegenerateAndNonSquare) {
  const auto vanishing = VectorFieldSet::from_values(
      "vanishing", 1, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(1) + 0 * x; },
      [](const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, x(0)); });
  std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Constant(1, 0.0),
                                   Eigen::VectorXd::Constant(1, 2.0)};
  const auto rep = check_ellipticity(vanishing, 0.1, pts);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.lambda_min_observed, 0.0);

  const auto tall = VectorFieldSet::from_values(
      "tall", 2, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x * 0.0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(2, 1); });
  std::vector<Eigen::VectorXd> p2{Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(check_ellipticity(tall, 0.1, p2), InvalidArgument);
  EXPECT_THROW(check_ellipticity(field_catalog("identity", 1), 0.0, pts), InvalidArgument);
}

TEST(VectorFields, FiniteDifferencesMatchAnalyticDerivatives) {
  const std::size_t d = 2;
  const double amp = 0.1 / std::sqrt(2.0);
  const auto fd = VectorFieldSet::from_values(
      "sin_fd", d, d,
      [](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(x.size());
        for (Eigen::Index a = 0; a < x.size(); ++a) v(a) = 0.1 * std::cos(x(a));
        return v;
      },
      [amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXd s(x.size(), x.size());
        for (Eigen::Index a = 0; a < x.size(); ++a)
          for (Eigen::Index j = 0; j < x.size(); ++j)
            s(a, j) = (a == j ? 1.0 : 0.0) + amp * std::sin(x(a) + x(j));
        return s;
      });
  EXPECT_TRUE(fd.uses_finite_differences());
  const auto exact = field_catalog("elliptic_sin_2d", d);
  gen::Engine g(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x{gen::uniform(g, -3, 3), gen::uniform(g, -3, 3)};
    const auto a = fd.evaluate(x, 2);
    const auto b = exact.evaluate(x, 2);
    EXPECT_LT((a.sigma - b.sigma).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((a.drift_jacobian - b.drift_jacobian).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_LT((a.jacobian[i] - b.jacobian[i]).cwiseAbs().maxCoeff(), 1e-8);
      for (std::size_t c = 0; c < d; ++c)
        EXPECT_LT((a.hessian[i][c] - b.hessian[i][c]).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(VectorFields, CatalogNamesAndGuards) {
  for (const auto& name : field_catalog_names()) {
    EXPECT_TRUE(is_catalog_field(name));
    const std::size_t dim = name == "geometric_1d" ? 1 : 2;
    EXPECT_EQ(field_catalog(name, dim).name(), name);
  }
  EXPECT_FALSE(is_catalog_field("nope"));
  EXPECT_THROW(field_catalog("nope", 2), InvalidArgument);
  EXPECT_THROW(field_catalog("geometric_1d", 2), InvalidArgument);
  const auto nan_field = VectorFieldSet::from_values(
      "nan", 1, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, NAN); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 1); });
  EXPECT_THROW(nan_field.evaluate(std::vector<double>{0.0}, 0), InvalidArgument);
}

TEST(ConvergenceProbe, EllipticFieldsConverge) {
  const auto fields = field_catalog("elliptic_sin_2d", 2);
  const std::vector<double> x0{0.3, -0.2};
  const auto probe = convergence_probe(fields, x0, HurstParam(0.6), 5, 5);
  ASSERT_EQ(probe.levels.size(), 4u);
  ASSERT_EQ(probe.log2_ratios.size(), 3u);
  for (std::size_t k = 0; k + 1 < probe.levels.size(); ++k) {
    EXPECT_EQ(probe.levels[k + 1].step_count, 2 * probe.levels[k].step_count);
    EXPECT_LT(probe.levels[k + 1].error, probe.levels[k].error);
  }
  EXPECT_GT(mean(probe.log2_ratios), 0.0);
  EXPECT_THROW(convergence_probe(fields, x0, HurstParam(0.3), 5, 4), InvalidArgument);
  EXPECT_THROW(convergence_probe(fields, x0, HurstParam(0.6), 5, 2), InvalidArgument);
}

TEST(ConvergenceProbe, SameSeedSameNumbers) {
  const auto fields = field_catalog("elliptic_sin_2d", 2);
  const std::vector<double> x0{0.0, 0.0};
  ProbeOptions opt;
  opt.coarsest_log2 = 4;
  const auto a = convergence_probe(fields, x0, HurstParam(0.5), 7, 4, opt);
  const auto b = convergence_probe(fields, x0, HurstParam(0.5), 7, 4, opt);
  for (std::size_t k = 0; k < a.levels.size(); ++k) EXPECT_EQ(a.levels[k].error, b.levels[k].error);
}
