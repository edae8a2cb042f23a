#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace memplan {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace memplan

namespace memplan {

// 64-bit FNV-1a. Stable across platforms; used where a cheap deterministic
// hash is needed (feature hashing, synthetic fixtures).
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string base64_encode(std::string_view bytes);

}  // namespace memplan
