// FNV-1a hashing for cache keys, config fingerprints and per-task seeds.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace aed {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::string_view s) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return fnv1a(&v, sizeof(v), h);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::int64_t v) {
  return fnv1a(&v, sizeof(v), h);
}

inline std::uint64_t hash_combine(std::uint64_t h, int v) {
  return hash_combine(h, static_cast<std::int64_t>(v));
}

// Doubles are hashed by bit pattern, so the key changes iff the value does.
inline std::uint64_t hash_combine(std::uint64_t h, double v) {
  return hash_combine(h, std::bit_cast<std::uint64_t>(v));
}

template <typename... Parts>
std::uint64_t hash_of(const Parts&... parts) {
  std::uint64_t h = kFnvOffset;
  ((h = hash_combine(h, parts)), ...);
  return h;
}

std::string hex_string(std::uint64_t h);

// Derives a child RNG seed from a master seed and a task tag.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::int64_t index = 0) {
  return hash_of(master, tag, index);
}

}  // namespace aed
