#include "fracdim/vector_fields.hpp"

#include <cmath>

#include "fracdim/error.hpp"

namespace fracdim {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void zero_blocks(FieldEval& e, int order) {
  e.drift.setZero();
  e.sigma.setZero();
  if (order >= 1) {
    e.drift_jacobian.setZero();
    for (auto& j : e.jacobian) j.setZero();
  }
  if (order >= 2) {
    for (auto& h : e.drift_hessian) h.setZero();
    for (auto& hi : e.hessian)
      for (auto& h : hi) h.setZero();
  }
}

} // namespace

VectorFieldSet::VectorFieldSet(std::string name, std::size_t dim_state, std::size_t dim_noise,
                               Evaluator eval, int smoothness_order,
                               std::optional<double> bound_hint)
    : name_(std::move(name)), n_(dim_state), d_(dim_noise), eval_(std::move(eval)),
      smoothness_(smoothness_order), bound_hint_(bound_hint) {
  if (n_ == 0 || d_ == 0) throw InvalidArgument("vector field dimensions must be positive");
  if (smoothness_ < 2) throw InvalidArgument("vector fields must be at least C^2");
  if (!eval_) throw InvalidArgument("vector field evaluator is empty");
}

FieldEval VectorFieldSet::make_buffer() const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto d = static_cast<Eigen::Index>(d_);
  FieldEval e;
  e.drift = Eigen::VectorXd::Zero(n);
  e.drift_jacobian = Eigen::MatrixXd::Zero(n, n);
  e.drift_hessian.assign(n_, Eigen::MatrixXd::Zero(n, n));
  e.sigma = Eigen::MatrixXd::Zero(n, d);
  e.jacobian.assign(d_, Eigen::MatrixXd::Zero(n, n));
  e.hessian.assign(d_, std::vector<Eigen::MatrixXd>(n_, Eigen::MatrixXd::Zero(n, n)));
  return e;
}

void VectorFieldSet::evaluate_into(std::span<const double> x, int order, FieldEval& out) const {
  if (x.size() != n_) throw InvalidArgument("state point has wrong dimension");
  if (order < 0 || order > 2) throw InvalidArgument("derivative order must be 0, 1 or 2");
  if (order > smoothness_) throw InvalidArgument("requested derivatives exceed field smoothness");
  zero_blocks(out, order);
  eval_(x, order, out);
  bool ok = all_finite(out.drift) && all_finite(out.sigma);
  if (order >= 1) {
    ok = ok && all_finite(out.drift_jacobian);
    for (const auto& j : out.jacobian) ok = ok && all_finite(j);
  }
  if (order >= 2) {
    for (const auto& h : out.drift_hessian) ok = ok && all_finite(h);
    for (const auto& hi : out.hessian)
      for (const auto& h : hi) ok = ok && all_finite(h);
  }
  if (!ok) throw InvalidArgument("vector field '" + name_ + "' returned a non-finite value");
}

FieldEval VectorFieldSet::evaluate(std::span<const double> x, int order) const {
  FieldEval e = make_buffer();
  evaluate_into(x, order, e);
  return e;
}

VectorFieldSet VectorFieldSet::from_values(std::string name, std::size_t dim_state,
                                           std::size_t dim_noise, DriftFn drift, SigmaFn sigma,
                                           std::optional<double> bound_hint) {
  const auto n = static_cast<Eigen::Index>(dim_state);
  const auto d = static_cast<Eigen::Index>(dim_noise);
  auto eval = [drift, sigma, n, d](std::span<const double> xs, int order, FieldEval& out) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
    out.drift = drift(x);
    out.sigma = sigma(x);
    if (out.drift.size() != n || out.sigma.rows() != n || out.sigma.cols() != d)
      throw InvalidArgument("field callback returned the wrong shape");
    const double scale = 1.0 + x.norm();
    if (order >= 1) {
      const double h = 1e-5 * scale;
      for (Eigen::Index b = 0; b < n; ++b) {
        Eigen::VectorXd xp = x, xm = x;
        xp(b) += h;
        xm(b) -= h;
        out.drift_jacobian.col(b) = (drift(xp) - drift(xm)) / (2.0 * h);
        const Eigen::MatrixXd sp = sigma(xp), sm = sigma(xm);
        for (Eigen::Index i = 0; i < d; ++i)
          out.jacobian[static_cast<std::size_t>(i)].col(b) = (sp.col(i) - sm.col(i)) / (2.0 * h);
      }
    }
    if (order >= 2) {
      // Four-point mixed stencil; a larger step balances truncation against
      // cancellation for second differences.
      const double h = 1e-4 * scale;
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = b; c < n; ++c) {
          Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
          pp(b) += h; pp(c) += h;
          pm(b) += h; pm(c) -= h;
          mp(b) -= h; mp(c) += h;
          mm(b) -= h; mm(c) -= h;
          const double denom = 4.0 * h * h;
          const Eigen::VectorXd fd = (drift(pp) - drift(pm) - drift(mp) + drift(mm)) / denom;
          const Eigen::MatrixXd sd = (sigma(pp) - sigma(pm) - sigma(mp) + sigma(mm)) / denom;
          for (Eigen::Index a = 0; a < n; ++a) {
            auto ua = static_cast<std::size_t>(a);
            out.drift_hessian[ua](b, c) = out.drift_hessian[ua](c, b) = fd(a);
            for (Eigen::Index i = 0; i < d; ++i)
              out.hessian[static_cast<std::size_t>(i)][ua](b, c) =
                  out.hessian[static_cast<std::size_t>(i)][ua](c, b) = sd(a, i);
          }
        }
    }
  };
  VectorFieldSet fs(std::move(name), dim_state, dim_noise, std::move(eval), 2, bound_hint);
  fs.finite_differences_ = true;
  return fs;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

VectorFieldSet identity_fields(std::size_t dim) {
  return VectorFieldSet(
      "identity", dim, dim,
      [](std::span<const double>, int, FieldEval& out) { out.sigma.setIdentity(); }, 3, 1.0);
}

VectorFieldSet geometric_fields(std::size_t dim) {
  if (dim != 1) throw InvalidArgument("geometric_1d is defined for dim = 1 only");
  return VectorFieldSet(
      "geometric_1d", 1, 1,
      [](std::span<const double> x, int order, FieldEval& out) {
        out.sigma(0, 0) = kGeometricSigma * x[0];
        if (order >= 1) out.jacobian[0](0, 0) = kGeometricSigma;
      },
      3);
}

VectorFieldSet elliptic_sin_fields(std::size_t dim) {
  const double amp = 0.1 / std::sqrt(static_cast<double>(dim));
  return VectorFieldSet(
      "elliptic_sin_2d", dim, dim,
      [dim, amp](std::span<const double> x, int order, FieldEval& out) {
        const auto n = static_cast<Eigen::Index>(dim);
        for (Eigen::Index a = 0; a < n; ++a) {
          out.drift(a) = 0.1 * std::cos(x[a]);
          for (Eigen::Index j = 0; j < n; ++j)
            out.sigma(a, j) = (a == j ? 1.0 : 0.0) + amp * std::sin(x[a] + x[j]);
        }
        if (order >= 1) {
          for (Eigen::Index a = 0; a < n; ++a) {
            out.drift_jacobian(a, a) = -0.1 * std::sin(x[a]);
            for (Eigen::Index j = 0; j < n; ++j) {
              const double c = amp * std::cos(x[a] + x[j]);
              auto& jac = out.jacobian[static_cast<std::size_t>(j)];
              jac(a, a) += c;
              jac(a, j) += c;
            }
          }
        }
        if (order >= 2) {
          for (Eigen::Index a = 0; a < n; ++a) {
            out.drift_hessian[static_cast<std::size_t>(a)](a, a) = -0.1 * std::cos(x[a]);
            for (Eigen::Index j = 0; j < n; ++j) {
              const double s = -amp * std::sin(x[a] + x[j]);
              auto& h = out.hessian[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
              // d/dx_b d/dx_c of sin(x_a + x_j) with b, c ranging over {a, j}.
              h(a, a) += s;
              h(a, j) += s;
              h(j, a) += s;
              h(j, j) += s;
            }
          }
        }
      },
      3, 1.0 + 0.1 * std::sqrt(static_cast<double>(dim)));
}

VectorFieldSet drift_only_fields(std::size_t dim) {
  return VectorFieldSet(
      "drift_only", dim, dim,
      [dim](std::span<const double> x, int order, FieldEval& out) {
        const auto n = static_cast<Eigen::Index>(dim);
        for (Eigen::Index a = 0; a < n; ++a) {
          out.drift(a) = std::sin(x[a]) - 0.5 * x[a];
          if (order >= 1) out.drift_jacobian(a, a) = std::cos(x[a]) - 0.5;
          if (order >= 2) out.drift_hessian[static_cast<std::size_t>(a)](a, a) = -std::sin(x[a]);
        }
      },
      3);
}

} // namespace

VectorFieldSet field_catalog(std::string_view name, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("field dimension must be positive");
  if (name == "identity") return identity_fields(dim);
  if (name == "geometric_1d") return geometric_fields(dim);
  if (name == "elliptic_sin_2d") return elliptic_sin_fields(dim);
  if (name == "drift_only") return drift_only_fields(dim);
  throw InvalidArgument("unknown field catalog name: " + std::string(name));
}

std::vector<std::string> field_catalog_names() {
  return {"identity", "geometric_1d", "elliptic_sin_2d", "drift_only"};
}

bool is_catalog_field(std::string_view name) {
  for (const auto& n : field_catalog_names())
    if (n == name) return true;
  return false;
}

} // namespace fracdim
