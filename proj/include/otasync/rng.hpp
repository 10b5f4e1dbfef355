#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace otasync {

// Counter-based random stream built on the SplitMix64 finalizer.
// Substreams are derived by hashing keys into the state rather than by
// sequential splitting, so a trial's draws depend only on (seed, keys) and
// never on scheduling or worker count.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(mix(seed ^ kGamma)) {}

  [[nodiscard]] RandomStream derive(std::uint64_t key) const {
    RandomStream s(*this);
    s.state_ = mix(s.state_ ^ mix(key + kGamma));
    return s;
  }

  [[nodiscard]] RandomStream derive(double key) const {
    return derive(std::bit_cast<std::uint64_t>(key));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on [0, 2*pi).
  double angle() { return 2.0 * std::numbers::pi * uniform(); }

  // Circularly symmetric complex Gaussian CN(0, variance).
  std::complex<double> complex_gaussian(double variance) {
    const double radius = std::sqrt(-variance * std::log(uniform_pos()));
    return std::polar(radius, angle());
  }

  // Real N(0, variance) via Box-Muller (spare value discarded).
  double gaussian(double variance) {
    const double radius = std::sqrt(-2.0 * variance * std::log(uniform_pos()));
    return radius * std::cos(angle());
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace otasync
