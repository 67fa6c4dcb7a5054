#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace semidx {

// Little-endian primitive readers and writers shared by every on-disk format.
// All multi-byte integers and floats in index and model files are stored
// little-endian regardless of host order.

namespace detail {

template <typename T>
inline T byteswap_int(T v) {
  static_assert(std::is_integral_v<T>);
  T out;
  auto* src = reinterpret_cast<const unsigned char*>(&v);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
  return out;
}

template <typename T>
inline T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    return byteswap_int(v);
  } else {
    return v;
  }
}

}  // namespace detail

template <typename T>
inline void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  T le = detail::to_le(value);
  os.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

inline void write_f32(std::ostream& os, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  write_le(os, bits);
}

template <typename T>
inline T read_le(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("unexpected end of file while reading ") + what);
  return detail::to_le(v);
}

inline float read_f32(std::istream& is, const char* what) {
  const std::uint32_t bits = read_le<std::uint32_t>(is, what);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void write_f32_array(std::ostream& os, const float* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, data[i]);
  }
}

inline void read_f32_array(std::istream& is, float* data, std::size_t n, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw std::runtime_error(std::string("unexpected end of file while reading ") + what);
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f32(is, what);
  }
}

// Unsigned LEB128. Postings lists store gap-encoded doc indexes with it.
inline void write_varint(std::ostream& os, std::uint64_t v) {
  while (v >= 0x80) {
    const unsigned char byte = static_cast<unsigned char>((v & 0x7f) | 0x80);
    os.put(static_cast<char>(byte));
    v >>= 7;
  }
  os.put(static_cast<char>(v));
}

inline std::uint64_t read_varint(std::istream& is, const char* what) {
  std::uint64_t v = 0;
  int shift = 0;
  while (true) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error(std::string("unexpected end of file while reading ") + what);
    v |= static_cast<std::uint64_t>(c & 0x7f) << shift;
    if ((c & 0x80) == 0) break;
    shift += 7;
    if (shift >= 64) throw std::runtime_error(std::string("varint overflow while reading ") + what);
  }
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
  const std::uint32_t n = read_le<std::uint32_t>(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error(std::string("unexpected end of file while reading ") + what);
  return s;
}

}  // namespace semidx
