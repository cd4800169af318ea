#pragma once

#include <cstdint>
#include <cstring>

namespace lvdd {

// IEEE 754 binary16 conversions. Rounding is to nearest-even; values whose
// magnitude exceeds the largest finite half (65504) clamp to +-65504 instead
// of producing infinities, so archived payloads stay finite.
inline std::uint16_t float_to_half_bits(float value) {
  std::uint32_t f;
  std::memcpy(&f, &value, sizeof f);
  const std::uint16_t sign = static_cast<std::uint16_t>((f >> 16) & 0x8000u);
  const std::uint32_t abs = f & 0x7fffffffu;

  if (abs >= 0x7f800000u)  // inf or NaN: NaN keeps a payload bit, inf clamps
    return abs > 0x7f800000u ? static_cast<std::uint16_t>(sign | 0x7e00u)
                             : static_cast<std::uint16_t>(sign | 0x7bffu);

  const int e = static_cast<int>(abs >> 23) - 127;
  if (e >= -14) {
    if (e > 15) return static_cast<std::uint16_t>(sign | 0x7bffu);
    std::uint32_t base = (static_cast<std::uint32_t>(e + 15) << 10) | ((abs & 0x7fffffu) >> 13);
    const std::uint32_t rem = abs & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (base & 1u))) ++base;
    if (base >= 0x7c00u) base = 0x7bffu;  // rounded past the largest finite half
    return static_cast<std::uint16_t>(sign | base);
  }

  // Subnormal half (or underflow to zero).
  const int shift = 13 + (-14 - e);
  if (shift > 24) return sign;
  const std::uint32_t full = 0x800000u | (abs & 0x7fffffu);
  std::uint32_t base = full >> shift;
  const std::uint32_t rem = full & ((1u << shift) - 1u);
  const std::uint32_t half_point = 1u << (shift - 1);
  if (rem > half_point || (rem == half_point && (base & 1u))) ++base;
  return static_cast<std::uint16_t>(sign | base);
}

inline float half_bits_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t mant = h & 0x3ffu;
  std::uint32_t f;
  if (exp == 0) {
    if (mant == 0) {
      f = sign;
    } else {
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      mant &= 0x3ffu;
      f = sign | (static_cast<std::uint32_t>(112 - e) << 23) | (mant << 13);
    }
  } else if (exp == 31) {
    f = sign | 0x7f800000u | (mant << 13);
  } else {
    f = sign | ((exp + 112u) << 23) | (mant << 13);
  }
  float out;
  std::memcpy(&out, &f, sizeof out);
  return out;
}

inline std::uint16_t double_to_half_bits(double v) {
  return float_to_half_bits(static_cast<float>(v));
}

inline double half_bits_to_double(std::uint16_t h) {
  return static_cast<double>(half_bits_to_float(h));
}

}  // namespace lvdd
