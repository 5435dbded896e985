#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace mdvg {

// 64-bit FNV-1a; stable across platforms, not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace mdvg
