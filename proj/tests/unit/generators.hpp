#pragma once

// Small random-input generators for property tests. Every generator draws
// from a caller-owned engine so a failing case can be replayed by seed.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "fracdim/fbm.hpp"
#include "fracdim/rough_path.hpp"

namespace fracdim::gen {

using Engine = std::mt19937_64;

inline double uniform(Engine& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t uniform_index(Engine& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline std::vector<double> gaussian_vector(Engine& g, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = z(g);
  return v;
}

/// Group element: the signature of a random piecewise-linear path.
inline TruncatedTensor random_group_element(Engine& g, std::size_t dim, std::size_t depth,
                                            std::size_t segments = 3) {
  TruncatedTensor acc = TruncatedTensor::identity(dim, depth);
  for (std::size_t k = 0; k < segments; ++k)
    acc = chen_concat(acc, segment_signature(gaussian_vector(g, dim), depth));
  return acc;
}

/// Arbitrary tensor (not necessarily a group element), level 0 included.
inline TruncatedTensor random_tensor(Engine& g, std::size_t dim, std::size_t depth) {
  TruncatedTensor t(dim, depth);
  for (auto& c : t.coefficients()) c = uniform(g, -1.0, 1.0);
  return t;
}

/// Gaussian random walk on [0, 1] with n intervals.
inline SamplePath random_walk(Engine& g, std::size_t n, std::size_t dim, double step_sd = 0.05) {
  std::vector<double> v((n + 1) * dim, 0.0);
  std::normal_distribution<double> z(0.0, step_sd);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t c = 0; c < dim; ++c) v[i * dim + c] = v[(i - 1) * dim + c] + z(g);
  return SamplePath(TimeGrid::unit(n + 1), dim, std::move(v));
}

/// Path from explicit per-point coordinates on [0, 1].
inline SamplePath path_from(std::size_t dim, std::vector<double> values) {
  const std::size_t n = values.size() / dim;
  return SamplePath(TimeGrid::unit(n), dim, std::move(values));
}

} // namespace fracdim::gen
