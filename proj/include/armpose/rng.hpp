#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace armpose {

/// Counter-based generator: draw n of stream (seed, stream) is
/// splitmix64(key(seed, stream) + n * 0x9e3779b97f4a7c15). Every value is a
/// pure function of (seed, stream, n), so results do not depend on platform,
/// thread scheduling or the order in which streams are consumed.
///
/// Uniform doubles take the top 53 bits; normals use Box-Muller with one pair
/// of uniforms per draw.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Seed for child stream `index` of `seed`.
  static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) + mix(index ^ 0x5851f42d4c957f2dULL));
  }

  std::uint64_t next_u64() { return mix(key_ + counter_++ * 0x9e3779b97f4a7c15ULL); }
  std::uint64_t counter() const { return counter_; }

  /// [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace armpose
