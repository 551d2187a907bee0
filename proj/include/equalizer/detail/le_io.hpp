#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

// Little-endian scalar encoding shared by the binary file formats.
namespace equalizer::detail {

template <class U>
void write_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
bool read_le(std::istream& is, U& value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return true;
}

inline void write_f64(std::ostream& os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }
inline void write_f32(std::ostream& os, float v) { write_le(os, std::bit_cast<std::uint32_t>(v)); }

inline bool read_f64(std::istream& is, double& v) {
  std::uint64_t bits;
  if (!read_le(is, bits)) return false;
  v = std::bit_cast<double>(bits);
  return true;
}

inline bool read_f32(std::istream& is, float& v) {
  std::uint32_t bits;
  if (!read_le(is, bits)) return false;
  v = std::bit_cast<float>(bits);
  return true;
}

}  // namespace equalizer::detail
