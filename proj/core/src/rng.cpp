#include "fracdim/rng.hpp"

namespace fracdim {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterRng CounterRng::substream(std::uint64_t seed, std::uint64_t component) noexcept {
  // Seeds of an ensemble are consecutive, so the seed is whitened before the
  // component index is folded in; otherwise (s+1)^0 would equal s^1.
  return CounterRng(mix64(seed) ^ component);
}

CounterRng::result_type CounterRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

} // namespace fracdim
