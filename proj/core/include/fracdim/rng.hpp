#pragma once

#include <cstdint>
#include <limits>

namespace fracdim {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based generator: the k-th output is mix64(key + (k+1)*golden),
/// so any position of any stream is a pure function of (key, k).
/// Models UniformRandomBitGenerator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Substream for one component of a seeded draw.
  static CounterRng substream(std::uint64_t seed, std::uint64_t component) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace fracdim
