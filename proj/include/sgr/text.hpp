#pragma once

#include <cstdio>
#include <string>

namespace sgr {

// Shortest-safe round-trip rendering (%.17g).
inline std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace sgr
