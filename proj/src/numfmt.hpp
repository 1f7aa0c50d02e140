#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace squeezesim::detail {

// Locale-independent, platform-stable rendering for CSV output.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace squeezesim::detail

#include <charconv>

namespace squeezesim::detail {

// Shortest text that parses back to the identical double.
inline std::string num_exact(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace squeezesim::detail
