#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mpa::core {

// Little-endian scalar IO, independent of host byte order.

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i)
    buf[i] =
        static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what = "binary stream") {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error(std::string(what) + ": truncated file");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void write_f32(std::ostream& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  write_le<uint32_t>(out, bits);
}

inline float read_f32(std::istream& in, const char* what = "binary stream") {
  uint32_t bits = read_le<uint32_t>(in, what);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

}  // namespace mpa::core
