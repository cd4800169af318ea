#pragma once

#include <cstddef>
#include <cstdint>

namespace lvdd {

// Element precision of archived payloads. Tensors are double in memory;
// archives store fp32 by default, fp16 behind a flag.
enum class Precision : std::uint8_t { fp32 = 0, fp16 = 1 };

constexpr std::uint64_t element_size(Precision p) {
  return p == Precision::fp32 ? 4 : 2;
}

// Section kinds inside a distilled archive.
enum class SectionKind : std::uint8_t { raw = 0, hosvd = 1, svd = 2 };

// Every section is laid out as
//   u8 kind, u8 precision, u8 order, u8 flags(=0),
//   order x { u32 extent d_i, u32 rank r_i },
//   payload (element_size bytes per element),
//   u32 crc32 over everything above.
// The fixed per-section overhead is therefore 8 + 8*order bytes.
constexpr std::uint64_t section_overhead_bytes(std::size_t order) {
  return 8 + 8 * static_cast<std::uint64_t>(order);
}

}  // namespace lvdd
