#pragma once

#include <cstdint>
#include <string_view>

namespace groundkit {

/// SplitMix64. Self-contained so that seeded outputs are identical on every
/// platform and standard library (std::uniform_int_distribution is not).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n). Modulo reduction; the bias at 64 bits is
  /// immaterial for sampling and keeps the draw sequence trivially portable.
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent stream for a named entity from a base seed.
inline SplitMix64 derived_rng(std::uint64_t seed, std::string_view key) {
  SplitMix64 mix(seed ^ fnv1a64(key));
  mix.next();
  return mix;
}

}  // namespace groundkit
