#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace dilemma {

inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 finaliser; used to turn structured keys into well-mixed seeds.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t combine_seed(std::uint64_t seed, std::string_view key) noexcept {
  return mix64(seed ^ mix64(fnv1a64(key)));
}

inline constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ mix64(value + 0x632be59bd9b4e019ULL));
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Checksum string stored alongside persisted artifacts.
inline std::string checksum(std::string_view bytes) { return "fnv1a64:" + hex64(fnv1a64(bytes)); }

} // namespace dilemma
