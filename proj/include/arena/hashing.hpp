#pragma once

#include <cstdint>
#include <string_view>

namespace arena {

/// FNV-1a over bytes. Stable across platforms, used for config hashes and
/// instance ids.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// splitmix64 finalizer; decorrelates structured inputs.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Combines a seed with counters into a fresh 64-bit value. Counter-based so
/// draws depend only on the key, never on evaluation order.
inline uint64_t derive_seed(uint64_t seed, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0) {
  uint64_t h = mix64(seed ^ 0x5bf03635f0935ad1ull);
  h = mix64(h ^ k1);
  h = mix64(h ^ k2);
  h = mix64(h ^ k3);
  return h;
}

inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  return mix64(seed ^ fnv1a64(tag));
}

/// Uniform double in [0,1) from a counter-derived value.
inline double unit_uniform(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace arena
