#pragma once

// Rough differential equation solver
//   X_t = x + int V_0(X) dt + sum_i int V_i(X) dB^i
// consuming a piecewise-linear signature lift of the driver.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fracdim/fbm.hpp"
#include "fracdim/rough_path.hpp"
#include "fracdim/vector_fields.hpp"

namespace fracdim {

enum class SchemeKind { step2_davie, step3 };

/// A step2 scheme consumes levels 1-2 of the driver; step3 adds level 3.
/// step_count = 0 means "as many steps as the driver has intervals".
struct SolverScheme {
  SchemeKind kind = SchemeKind::step2_davie;
  std::size_t step_count = 0;
};

/// step2 for H > 1/3, step3 for H <= 1/3.
SchemeKind scheme_for(HurstParam h) noexcept;
/// Rejects step2 below H = 1/3.
void validate_scheme(SchemeKind kind, HurstParam h);
std::size_t scheme_depth(SchemeKind kind) noexcept;

inline constexpr double kOverflowGuard = 1e12;

struct EllipticityReport {
  double lambda_min_observed = 0.0;
  std::vector<Eigen::VectorXd> sample_points;
  /// Smallest eigenvalue of V V^T at each sample point.
  std::vector<double> eigenvalues;
  bool pass = false;
};

/// Smallest eigenvalue of V(x) V(x)^T over the sample points, against lambda.
EllipticityReport check_ellipticity(const VectorFieldSet& fields, double lambda,
                                    std::span<const Eigen::VectorXd> sample_points);

/// Solves on the driver's grid; throws SolverError when |X| exceeds the
/// overflow guard.
SamplePath solve(const VectorFieldSet& fields, std::span<const double> x0,
                 const SignaturePath& driver, SolverScheme scheme);

struct ProbeLevel {
  std::size_t step_count = 0;
  /// Sup-norm distance to the finest solution over the coarse grid points.
  double error = 0.0;
};

struct ConvergenceProbe {
  std::vector<ProbeLevel> levels;
  /// log2(error_j / error_{j+1}) between consecutive levels; NaN where an
  /// error is zero.
  std::vector<double> log2_ratios;
};

struct ProbeOptions {
  std::size_t coarsest_log2 = 6;
  SchemeKind scheme = SchemeKind::step2_davie;
  GeneratorKind generator = GeneratorKind::circulant;
};

/// Solves on dyadic grids 2^j, j = coarsest .. coarsest + levels - 1, all
/// driven by Chen-coarsenings of a single fine fBm lift, and measures each
/// coarse solution against the finest one.
ConvergenceProbe convergence_probe(const VectorFieldSet& fields, std::span<const double> x0,
                                   HurstParam h, std::uint64_t seed, std::size_t levels,
                                   const ProbeOptions& options = {});

} // namespace fracdim
