#ifndef ADVBATCH_RANDOM_HPP
#define ADVBATCH_RANDOM_HPP

// The random pipeline is fixed so that every run of this library reproduces
// bit-identical data, weights and attack noise:
//   seed  -> splitmix64 -> std::mt19937_64
//   uniform01 = (next() >> 11) * 2^-53          (53-bit, in [0, 1))
//   gaussian  = Box-Muller on two uniforms, cosine branch only
// std::*_distribution is avoided because its algorithm is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace advbatch {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of 64-bit values; used to derive stable seeds.
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do r = engine_(); while (r >= limit);
    return r % n;
  }
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace advbatch

#endif  // ADVBATCH_RANDOM_HPP
