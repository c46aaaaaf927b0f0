#pragma once

// Shortest-exact text formatting shared by every CSV/JSON writer. %.17g round
// trips doubles, so identical numbers always serialize to identical bytes.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace eqz {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace eqz
