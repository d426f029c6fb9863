#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vlab {

__extension__ using u128 = unsigned __int128;

// All timestamps and durations are integer nanoseconds. A timestamp is a
// duration since the origin of whichever clock produced it.
using Nanos = std::chrono::nanoseconds;

constexpr Nanos operator""_ns(unsigned long long v) { return Nanos(static_cast<std::int64_t>(v)); }
constexpr Nanos operator""_us(unsigned long long v) { return Nanos(static_cast<std::int64_t>(v) * 1000); }
constexpr Nanos operator""_ms(unsigned long long v) { return Nanos(static_cast<std::int64_t>(v) * 1000000); }

constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

// Decimal units throughout: 1 Mbyte = 10^6 bytes, 1 Gbps = 10^9 bit/s.
constexpr std::uint64_t kKbyte = 1'000;
constexpr std::uint64_t kMbyte = 1'000'000;
constexpr std::uint64_t kGbps = 1'000'000'000;

/// Time to clock `bits` onto a channel running at `rate_bps`, rounded up to
/// the next whole nanosecond so it never undershoots the ideal value.
inline Nanos serialization_time(std::uint64_t bits, std::uint64_t rate_bps) {
  if (rate_bps == 0) throw std::invalid_argument("serialization_time: rate must be > 0");
  const u128 num = static_cast<u128>(bits) * kNanosPerSecond;
  const u128 q = (num + rate_bps - 1) / rate_bps;
  return Nanos(static_cast<std::int64_t>(q));
}

inline double to_ms(Nanos d) { return static_cast<double>(d.count()) / 1e6; }
inline double to_us(Nanos d) { return static_cast<double>(d.count()) / 1e3; }

/// Formats a nanosecond count as milliseconds with six decimals, which is
/// lossless at nanosecond resolution.
std::string format_ms(Nanos d);

/// Parses "7.3ms", "250us", "100ns", "2s" or a bare integer (nanoseconds).
Nanos parse_duration(const std::string& text);

/// Renders a duration in the most compact unit that is exact.
std::string format_duration(Nanos d);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vlab
