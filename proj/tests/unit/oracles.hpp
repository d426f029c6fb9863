#pragma once

// Independent reference computations used to check the library. They are
// written from the definitions, not by calling into the code under test.

#include <cstdint>
#include <vector>

namespace oracle {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// ceil(bits * 1e9 / rate) in exact integer arithmetic via long division.
inline std::int64_t serialization_ns(std::uint64_t bits, std::uint64_t rate) {
  const std::uint64_t whole = bits / rate;
  const std::uint64_t rem = bits % rate;
  std::uint64_t frac = 0;
  std::uint64_t r = rem;
  for (int i = 0; i < 9; ++i) {
    r *= 10;
    frac = frac * 10 + r / rate;
    r %= rate;
  }
  return static_cast<std::int64_t>(whole * 1'000'000'000ULL + frac + (r != 0 ? 1 : 0));
}

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace oracle
