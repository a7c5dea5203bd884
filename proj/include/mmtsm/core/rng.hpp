#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mmtsm {

/// splitmix64 step; the standard seed-expansion mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Folds several stream identifiers into one 64-bit seed. Used everywhere a
/// component needs an independent deterministic stream derived from the
/// experiment seed (per clip, per epoch, per purpose).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8f1bbcdc4d9bull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

/// FNV-1a over bytes; used for config hashing (stability, not security).
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mmtsm
