#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asyred::io {

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  os.write(buf.data(), buf.size());
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size()))
    throw format_error("unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void put_bytes(std::ostream& os, std::span<const std::byte> bytes) {
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void get_bytes(std::istream& is, std::span<std::byte> out) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size())))
    throw format_error("unexpected end of file");
}

inline void put_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), 4); }

inline void expect_magic(std::istream& is, std::string_view magic) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic.data(), 4) != 0)
    throw format_error("bad magic, expected " + std::string(magic));
}

}  // namespace asyred::io
