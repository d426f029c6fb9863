#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vlab/frame.hpp"
#include "vlab/rng.hpp"
#include "vlab/units.hpp"

using namespace vlab;

TEST(Units, RequiredBandwidthFor352MegabyteFramesAt30Fps) {
  const double bps = required_bandwidth_bps(3'520'000, 30.0);
  EXPECT_DOUBLE_EQ(bps, 3'520'000.0 * 8 * 30);
  EXPECT_NEAR(bps / 1e6, 844.8, 844.8 * 1e-3);
}

TEST(Units, SerializationTimeMatchesLongDivision) {
  const std::uint64_t rates[] = {1'000'000'000, 1'500'000'000, 2'000'000'000, 10'000'000'000, 7, 999'999'937};
  const std::uint64_t bits[] = {0, 1, 8, 1024 * 8, 3'520'000ULL * 8, 123'456'789};
  for (auto r : rates) {
    for (auto b : bits) {
      EXPECT_EQ(serialization_time(b, r).count(), oracle::serialization_ns(b, r)) << b << " bits @ " << r;
    }
  }
}

TEST(Units, SerializationOfWholeFrameAtOneAndTenGbps) {
  EXPECT_EQ(serialization_time(3'520'000ULL * 8, kGbps), Nanos(28'160'000));
  EXPECT_EQ(serialization_time(3'520'000ULL * 8, 10 * kGbps), Nanos(2'816'000));
}

TEST(Units, SerializationRejectsZeroRate) { EXPECT_THROW(serialization_time(8, 0), std::invalid_argument); }

TEST(Units, DurationParsingAndFormatting) {
  EXPECT_EQ(parse_duration("7.3ms"), Nanos(7'300'000));
  EXPECT_EQ(parse_duration("250us"), Nanos(250'000));
  EXPECT_EQ(parse_duration("100ns"), Nanos(100));
  EXPECT_EQ(parse_duration("2s"), Nanos(2'000'000'000));
  EXPECT_EQ(parse_duration("42"), Nanos(42));
  EXPECT_THROW(parse_duration("fast"), ConfigError);
  for (const Nanos d : {Nanos(0), Nanos(1), Nanos(7'300'000), Nanos(2'000'000'000), Nanos(1'234'567)}) {
    EXPECT_EQ(parse_duration(format_duration(d)), d);
  }
  EXPECT_EQ(format_ms(Nanos(20'700'000)), "20.700000");
  EXPECT_EQ(format_ms(Nanos(1)), "0.000001");
}

TEST(Rng, NamedStreamsAreIndependentAndReproducible) {
  SeedStream a(7, "link/loss");
  SeedStream b(7, "link/loss");
  SeedStream c(7, "link/switching");
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformIntStaysInRange) {
  SeedStream s(3, "u");
  for (int i = 0; i < 10'000; ++i) {
    const auto v = s.uniform_int(-5, 5);
    EXPECT_GE(v, -5);
    EXPECT_LE(v, 5);
  }
  EXPECT_EQ(s.uniform_int(4, 4), 4);
}

TEST(Rng, BernoulliFrequencyNearProbability) {
  SeedStream s(11, "b");
  int hits = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) hits += s.bernoulli(0.05) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.05, 0.003);
}
