#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "vlab/config.hpp"

using namespace vlab;

namespace {

bool names_key(const std::vector<Diagnostic>& ds, const std::string& key) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.key == key; });
}

}  // namespace

TEST(Config, DefaultsAreValid) { EXPECT_TRUE(validate(ScenarioConfig{}).empty()); }

TEST(Config, EveryScenarioIsValid) {
  for (const auto& name : scenario_names()) {
    EXPECT_TRUE(validate(scenario(name)).empty()) << name;
  }
  EXPECT_THROW(scenario("no-such-scenario"), ConfigError);
}

TEST(Config, OutOfRangeLossRateIsDiagnosed) {
  auto c = parse_config("hop1.loss_rate=1.5\n");
  const auto ds = validate(c);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].key, "hop1.loss_rate");
  EXPECT_EQ(ds[0].value, "1.5");
  EXPECT_NE(ds[0].message().find("[0,1]"), std::string::npos);
}

TEST(Config, ZeroPacingNamesTheHop) {
  auto c = parse_config("hop2.pacing_bps=0\n");
  const auto ds = validate(c);
  ASSERT_TRUE(names_key(ds, "hop2.pacing_bps"));
  EXPECT_NE(ds[0].constraint.find("hop2"), std::string::npos);
}

TEST(Config, ZeroDurationIsDiagnosed) {
  ScenarioConfig c;
  c.duration_s = 0;
  EXPECT_TRUE(names_key(validate(c), "duration_s"));
}

TEST(Config, EveryViolationIsReported) {
  auto c = parse_config("hop1.loss_rate=2\nhop2.pacing_bps=0\nduration_s=0\n");
  EXPECT_GE(validate(c).size(), 3u);
}

TEST(Config, DumpParseRoundTrip) {
  for (const auto& name : scenario_names()) {
    const auto original = scenario(name);
    const auto text = dump_config(original);
    EXPECT_EQ(dump_config(parse_config(text)), text) << name;
  }
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  const auto c = parse_config("# comment\n\n  seed = 42  # trailing\nhop1.pacing_bps=1500000000\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.hop1.pacing_bps, 1'500'000'000u);
}

TEST(Config, DurationsAcceptUnits) {
  const auto c = parse_config("relay.segment_processing=880us\ntransport.nack_delay=2ms\n");
  EXPECT_EQ(c.relay_node.segment_processing, Nanos(880'000));
  EXPECT_EQ(c.transport.nack_delay, Nanos(2'000'000));
}

TEST(Config, UnknownKeyIsRejected) {
  EXPECT_THROW(parse_config("hop3.pacing_bps=1\n"), ConfigError);
  ScenarioConfig c;
  EXPECT_THROW(set_config_value(c, "nope", "1"), ConfigError);
}

TEST(Config, ErrorsCarryTheLineNumber) {
  try {
    parse_config("seed=1\nseed=abc\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  try {
    parse_config("seed=1\nno equals sign\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, EnvironmentOverrides) {
  EXPECT_EQ(env_var_name("hop1.pacing_bps"), "VLAB_HOP1_PACING_BPS");
  const std::map<std::string, std::string> env{{"VLAB_SEED", "9"}, {"VLAB_HOP2_LOSS_RATE", "0.01"}};
  auto lookup = [&env](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  ScenarioConfig c;
  const auto applied = apply_env_overrides(c, lookup);
  EXPECT_EQ(applied.size(), 2u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.hop2.link.loss_rate, 0.01);
}

TEST(Config, FrameCountFollowsDurationAndRate) {
  ScenarioConfig c;
  EXPECT_EQ(c.frame_count(), 300u);
  c.duration_s = 1.0;
  c.capture.fps = 60;
  EXPECT_EQ(c.frame_count(), 60u);
}

TEST(Config, ReceiverPacingFallsBackToHop2) {
  ScenarioConfig c;
  c.receivers = 3;
  c.hop2.pacing_bps = 7;
  c.relay_node.receiver_pacing_bps = {5};
  EXPECT_EQ(c.downstream_pacing(0), 5u);
  EXPECT_EQ(c.downstream_pacing(2), 7u);
}
