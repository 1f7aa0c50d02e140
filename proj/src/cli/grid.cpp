#include <charconv>
#include <cmath>
#include <string>

#include "../numfmt.hpp"
#include "squeezesim/config.hpp"
#include "squeezesim/errors.hpp"

namespace squeezesim::cli {

namespace {

double parse_number(std::string_view s, std::string_view what) {
  // strtod accepts exponents and is locale-stable enough for the "C" locale we run in.
  const std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v))
    throw ValidationError("grid: bad " + std::string(what) + " '" + buf + "'");
  return v;
}

}  // namespace

std::vector<double> Grid::values() const {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = min;
    return out;
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / denom;
    out[i] = log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
  }
  // Pin the end points exactly.
  out.front() = min;
  out.back() = max;
  return out;
}

void Grid::validate(std::string_view where) const {
  const std::string w(where);
  if (n == 0) throw ValidationError(w + ": grid needs at least one point");
  if (!std::isfinite(min) || !std::isfinite(max)) throw ValidationError(w + ": grid bounds must be finite");
  if (max < min) throw ValidationError(w + ": grid max must be >= min");
  if (log && !(min > 0.0)) throw ValidationError(w + ": log grid bounds must be positive");
  if (min < 0.0) throw ValidationError(w + ": grid bounds must not be negative");
}

Grid parse_grid(std::string_view text) {
  Grid g;
  std::string_view body = text;
  const auto comma = text.find(',');
  if (comma != std::string_view::npos) {
    const std::string_view flag = text.substr(comma + 1);
    if (flag == "log") g.log = true;
    else if (flag == "lin" || flag == "linear") g.log = false;
    else throw ValidationError("grid: spacing flag must be 'log' or 'lin', got '" + std::string(flag) + "'");
    body = text.substr(0, comma);
  }
  const auto c1 = body.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : body.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw ValidationError("grid: expected min:max:n[,log], got '" + std::string(text) + "'");
  g.min = parse_number(body.substr(0, c1), "min");
  g.max = parse_number(body.substr(c1 + 1, c2 - c1 - 1), "max");
  const std::string_view ns = body.substr(c2 + 1);
  std::size_t n = 0;
  const auto [p, ec] = std::from_chars(ns.data(), ns.data() + ns.size(), n);
  if (ec != std::errc() || p != ns.data() + ns.size()) throw ValidationError("grid: bad point count '" + std::string(ns) + "'");
  g.n = n;
  g.validate("grid");
  return g;
}

std::string to_string(const Grid& g) {
  std::string s = detail::num_exact(g.min) + ":" + detail::num_exact(g.max) + ":" + std::to_string(g.n);
  if (g.log) s += ",log";
  return s;
}

}  // namespace squeezesim::cli
