#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>

namespace asyred {

namespace detail {

// Reflected Castagnoli polynomial (0x1EDC6F41 bit-reversed).
inline constexpr std::uint32_t kCrc32cPoly = 0x82F63B78u;

using Crc32cTables = std::array<std::array<std::uint32_t, 256>, 8>;

constexpr Crc32cTables make_crc32c_tables() {
  Crc32cTables t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ ((c & 1u) ? kCrc32cPoly : 0u);
    t[0][i] = c;
  }
  for (std::size_t s = 1; s < 8; ++s)
    for (std::size_t i = 0; i < 256; ++i)
      t[s][i] = (t[s - 1][i] >> 8) ^ t[0][t[s - 1][i] & 0xFFu];
  return t;
}

inline constexpr Crc32cTables kCrc32cTables = make_crc32c_tables();

}  // namespace detail

/// Continues a CRC-32C over `data`. `state` is the raw register (pre-inverted).
inline std::uint32_t crc32c_update(std::uint32_t state, std::span<const std::byte> data) {
  const auto& t = detail::kCrc32cTables;
  const std::byte* p = data.data();
  std::size_t n = data.size();
  // slicing-by-8
  while (n >= 8) {
    std::uint32_t lo;
    std::uint32_t hi;
    std::memcpy(&lo, p, 4);
    std::memcpy(&hi, p + 4, 4);
    if constexpr (std::endian::native == std::endian::big) {
      lo = __builtin_bswap32(lo);
      hi = __builtin_bswap32(hi);
    }
    lo ^= state;
    state = t[7][lo & 0xFF] ^ t[6][(lo >> 8) & 0xFF] ^ t[5][(lo >> 16) & 0xFF] ^ t[4][lo >> 24] ^
            t[3][hi & 0xFF] ^ t[2][(hi >> 8) & 0xFF] ^ t[1][(hi >> 16) & 0xFF] ^ t[0][hi >> 24];
    p += 8;
    n -= 8;
  }
  while (n--) state = (state >> 8) ^ t[0][(state ^ static_cast<std::uint8_t>(*p++)) & 0xFFu];
  return state;
}

/// Standard CRC-32C: reflected, init 0xFFFFFFFF, final xor 0xFFFFFFFF.
inline std::uint32_t crc32c(std::span<const std::byte> data) {
  return crc32c_update(0xFFFFFFFFu, data) ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32c(const void* data, std::size_t len) {
  return crc32c(std::span<const std::byte>(static_cast<const std::byte*>(data), len));
}

}  // namespace asyred
