#ifndef ADVBATCH_HALF_HPP
#define ADVBATCH_HALF_HPP

// Software IEEE 754 binary16 emulation. Values stay in double; rounding to
// binary16 is done with the add-and-subtract-a-power-of-two trick, which relies
// on the default round-to-nearest-even FP environment (no -ffast-math).

#include <bit>
#include <cmath>
#include <cstdint>

namespace advbatch::half {

inline constexpr double kMaxFinite = 65504.0;
/// Halfway between 65504 and 2^16; ties-to-even sends it (and anything above) to infinity.
inline constexpr double kOverflowThreshold = 65520.0;
inline constexpr double kMinNormal = 0x1p-14;
inline constexpr double kMinSubnormal = 0x1p-24;

/// Rounds a double to the nearest binary16 value (ties to even) and returns it as a double.
inline double round(double x) noexcept {
  if (!std::isfinite(x)) return x;
  const double mag = std::fabs(x);
  if (mag >= kOverflowThreshold) return std::copysign(INFINITY, x);
  double r;
  if (mag < kMinNormal) {
    // spacing 2^-24; 2^28 + mag has exactly that ulp
    constexpr double c = 0x1p28;
    r = (mag + c) - c;
  } else {
    const auto biased = static_cast<int>((std::bit_cast<std::uint64_t>(mag) >> 52) & 0x7ff);
    // spacing 2^(e-10) with e = biased - 1023; use c = 2^(e+42)
    const double c = std::bit_cast<double>(static_cast<std::uint64_t>(biased + 42) << 52);
    r = (mag + c) - c;
  }
  return std::copysign(r, x);
}

/// Encodes a value that is already exactly representable (e.g. the output of round()).
inline std::uint16_t to_bits(double x) noexcept {
  const double v = round(x);
  const std::uint16_t sign = std::signbit(v) ? 0x8000 : 0;
  const double mag = std::fabs(v);
  if (std::isnan(v)) return 0x7e00;
  if (std::isinf(v)) return sign | 0x7c00;
  if (mag < kMinNormal) return sign | static_cast<std::uint16_t>(mag * 0x1p24);
  int exp = 0;
  const double frac = std::frexp(mag, &exp);  // mag = frac * 2^exp, frac in [0.5, 1)
  const auto mantissa = static_cast<std::uint16_t>((frac * 2.0 - 1.0) * 1024.0);
  const auto biased = static_cast<std::uint16_t>(exp - 1 + 15);
  return sign | static_cast<std::uint16_t>(biased << 10) | mantissa;
}

inline double from_bits(std::uint16_t bits) noexcept {
  const bool negative = (bits & 0x8000) != 0;
  const int biased = (bits >> 10) & 0x1f;
  const int mantissa = bits & 0x3ff;
  double mag;
  if (biased == 0x1f) {
    mag = mantissa == 0 ? INFINITY : NAN;
  } else if (biased == 0) {
    mag = std::ldexp(static_cast<double>(mantissa), -24);
  } else {
    mag = std::ldexp(1.0 + mantissa / 1024.0, biased - 15);
  }
  return negative ? -mag : mag;
}

inline bool is_representable(double x) noexcept {
  return std::isnan(x) || round(x) == x;
}

}  // namespace advbatch::half

#endif  // ADVBATCH_HALF_HPP
