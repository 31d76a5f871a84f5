#pragma once

#include <cstdint>
#include <string>

namespace mpa::core {

/// FNV-1a 64-bit running hash.
struct Fnv1a {
  uint64_t state = 0xcbf29ce484222325ULL;

  void update(const void* bytes, size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  uint64_t digest() const { return state; }
};

/// 16-character lowercase hex form of a 64-bit digest.
std::string hex_digest(uint64_t digest);

/// Hex digest of a byte buffer.
std::string fnv1a_hex(const void* bytes, size_t n);

/// Hex digest of a file's contents. Throws std::runtime_error if unreadable.
std::string fnv1a_file_hex(const std::string& path);

}  // namespace mpa::core
