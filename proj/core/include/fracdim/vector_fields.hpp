#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fracdim {

/// Fields and derivatives at one state point, for X in R^n driven by R^d.
///   sigma.col(i)        V_i(x)
///   jacobian[i](a, b)   dV_i^a / dx_b
///   hessian[i][a](b, c) d^2 V_i^a / dx_b dx_c
/// The drift V_0 has the same three blocks. Derivative blocks are only filled
/// up to the order requested from VectorFieldSet::evaluate.
struct FieldEval {
  Eigen::VectorXd drift;
  Eigen::MatrixXd drift_jacobian;
  std::vector<Eigen::MatrixXd> drift_hessian;
  Eigen::MatrixXd sigma;
  std::vector<Eigen::MatrixXd> jacobian;
  std::vector<std::vector<Eigen::MatrixXd>> hessian;
};

/// Drift V_0 and diffusion fields V_1..V_d on R^n.
class VectorFieldSet {
public:
  /// Fills `out` at x with derivatives up to `order` (0, 1 or 2). The
  /// callback may assume `out` is already sized.
  using Evaluator = std::function<void(std::span<const double> x, int order, FieldEval& out)>;
  using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using SigmaFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  VectorFieldSet(std::string name, std::size_t dim_state, std::size_t dim_noise, Evaluator eval,
                 int smoothness_order = 3, std::optional<double> bound_hint = std::nullopt);

  /// Fields given by value only; derivatives come from central differences
  /// with step 1e-5 * (1 + |x|).
  static VectorFieldSet from_values(std::string name, std::size_t dim_state,
                                    std::size_t dim_noise, DriftFn drift, SigmaFn sigma,
                                    std::optional<double> bound_hint = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::size_t dim_state() const noexcept { return n_; }
  std::size_t dim_noise() const noexcept { return d_; }
  int smoothness_order() const noexcept { return smoothness_; }
  const std::optional<double>& bound_hint() const noexcept { return bound_hint_; }
  bool uses_finite_differences() const noexcept { return finite_differences_; }

  /// Evaluates and validates shapes and finiteness.
  FieldEval evaluate(std::span<const double> x, int order) const;
  void evaluate_into(std::span<const double> x, int order, FieldEval& out) const;

  FieldEval make_buffer() const;

private:
  std::string name_;
  std::size_t n_;
  std::size_t d_;
  Evaluator eval_;
  int smoothness_;
  std::optional<double> bound_hint_;
  bool finite_differences_ = false;
};

// Built-in field sets addressable by name:
//   identity          V = I, V_0 = 0 (any dim)
//   geometric_1d      V_1(x) = x, V_0 = 0 (dim 1)
//   elliptic_sin_2d   V(x) = I + 0.1 S(x), S_ij = sin(x_i + x_j)/sqrt(d),
//                     V_0(x)_i = 0.1 cos(x_i); defined for any dim, d = 2 is the
//                     reference configuration
//   drift_only        V = 0, V_0(x) = sin(x) - x/2 componentwise (any dim)
VectorFieldSet field_catalog(std::string_view name, std::size_t dim);
std::vector<std::string> field_catalog_names();
bool is_catalog_field(std::string_view name);

/// Volatility of the geometric_1d catalog entry.
inline constexpr double kGeometricSigma = 1.0;

} // namespace fracdim
