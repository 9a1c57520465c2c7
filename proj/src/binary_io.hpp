#pragma once

// Little/big-endian scalar helpers shared by the binary file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "emlp/error.hpp"

namespace emlp::detail {

template <typename T>
  requires std::is_arithmetic_v<T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
  requires std::is_arithmetic_v<T>
T read_le(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw CorruptionError(std::string("unexpected end of file while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

inline std::uint32_t read_be_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IoError(std::string("truncated file while reading ") + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* format) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || std::memcmp(got.data(), magic, 4) != 0) {
    throw FormatError(std::string("not a ") + format + " file (bad magic)");
  }
}

/// Throws CorruptionError unless the stream is exhausted.
inline void expect_eof(std::istream& in, const char* format) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CorruptionError(std::string(format) + " file has trailing bytes beyond its header size");
  }
}

}  // namespace emlp::detail
