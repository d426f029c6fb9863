#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vlab {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// A named, independently seeded random stream. Each source of randomness in
/// a scenario (loss per link, switching jitter, stalls, app timings) draws
/// from its own stream.
class SeedStream {
 public:
  SeedStream() : SeedStream(0, "default") {}
  SeedStream(std::uint64_t seed, std::string_view name) {
    std::uint64_t s = seed ^ fnv1a64(name);
    engine_.seed(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(
                    (static_cast<u128>(engine_()) * span) >> 64);
  }

  /// True with probability p. p <= 0 never draws true, p >= 1 always does,
  /// and both still consume one draw so streams stay aligned.
  bool bernoulli(double p) {
    const double u = uniform01();
    return u < p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vlab
