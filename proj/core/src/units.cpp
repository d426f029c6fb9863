#include "vlab/units.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace vlab {

std::string format_ms(Nanos d) {
  const std::int64_t ns = d.count();
  const bool negative = ns < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(ns + 1)) + 1 : static_cast<std::uint64_t>(ns);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%06llu", negative ? "-" : "",
                static_cast<unsigned long long>(mag / 1'000'000), static_cast<unsigned long long>(mag % 1'000'000));
  return buf;
}

Nanos parse_duration(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t j = text.size();
  while (j > i && std::isspace(static_cast<unsigned char>(text[j - 1]))) --j;
  const std::string s = text.substr(i, j - i);
  if (s.empty()) throw ConfigError("empty duration");

  std::size_t unit_at = s.size();
  while (unit_at > 0 && std::isalpha(static_cast<unsigned char>(s[unit_at - 1]))) --unit_at;
  const std::string number = s.substr(0, unit_at);
  const std::string unit = s.substr(unit_at);

  long double scale = 1.0L;
  if (unit.empty() || unit == "ns") {
    scale = 1.0L;
  } else if (unit == "us") {
    scale = 1e3L;
  } else if (unit == "ms") {
    scale = 1e6L;
  } else if (unit == "s") {
    scale = 1e9L;
  } else {
    throw ConfigError("duration '" + text + "': unknown unit '" + unit + "'");
  }

  char* end = nullptr;
  const long double v = std::strtold(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size() || !std::isfinite(static_cast<double>(v))) {
    throw ConfigError("duration '" + text + "' is not a number");
  }
  return Nanos(static_cast<std::int64_t>(std::llround(static_cast<double>(v * scale))));
}

std::string format_duration(Nanos d) {
  const std::int64_t ns = d.count();
  if (ns != 0 && ns % 1'000'000'000 == 0) return std::to_string(ns / 1'000'000'000) + "s";
  if (ns != 0 && ns % 1'000'000 == 0) return std::to_string(ns / 1'000'000) + "ms";
  if (ns != 0 && ns % 1'000 == 0) return std::to_string(ns / 1'000) + "us";
  return std::to_string(ns) + "ns";
}

}  // namespace vlab
