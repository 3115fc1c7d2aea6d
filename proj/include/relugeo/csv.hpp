#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace relugeo {

/// Shortest decimal representation that round-trips the exact double.
/// Keeps CSV output byte-identical across reruns of the same build.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Exact hex-float form, for the model format.
inline std::string format_double_hex(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace relugeo
