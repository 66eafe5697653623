#pragma once

#include <cmath>
#include <cstdint>

// Deterministic PRNG used by every data generator and random initializer in
// the library, so runs replay bitwise across platforms. The core is the
// splitmix64 sequence: the state advances by the 64-bit golden-ratio constant
// 0x9E3779B97F4A7C15 and each output is the finalizer
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27;  z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
// Doubles come from the top 53 bits; normals from Box-Muller with the
// second value cached.

namespace spdopt {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed), seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw; consumes two uniforms every other call.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  /// Independent child stream keyed off the original seed, so split(k) is
  /// reproducible no matter how much of this stream was consumed.
  SplitMix64 split(std::uint64_t stream) const {
    std::uint64_t z = seed_ + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return SplitMix64(z ^ (z >> 31));
  }

 private:
  std::uint64_t state_;
  std::uint64_t seed_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace spdopt
