#include <gtest/gtest.h>

#include "vlab/probe.hpp"

using namespace vlab;

TEST(Probe, ZeroStageModelsLeaveOnlySerialization) {
  LinkModel link;
  link.bandwidth_bps = kGbps;
  link.hops = 0;
  const auto r = run_probe_experiment(link, NodeStageModel{}, NodeStageModel{}, {1000}, 1, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].samples, 1u);
  EXPECT_DOUBLE_EQ(r[0].stage("total").mean_ns, 8000.0);
  EXPECT_DOUBLE_EQ(r[0].stage("serialization").mean_ns, 8000.0);
}

TEST(Probe, TotalsIncreaseWithPacketSize) {
  const auto hops = run_probe_scenario(scenario("paper-probe"));
  ASSERT_EQ(hops.size(), 2u);
  for (const auto& hop : hops) {
    ASSERT_EQ(hop.sizes.size(), 3u);
    EXPECT_LT(hop.sizes[0].stage("total").mean_ns, hop.sizes[1].stage("total").mean_ns) << hop.hop;
    EXPECT_LT(hop.sizes[1].stage("total").mean_ns, hop.sizes[2].stage("total").mean_ns) << hop.hop;
    for (const auto& s : hop.sizes) EXPECT_LT(s.stage("total").mean_ns, 50'000.0);
  }
}

TEST(Probe, SizesDifferOnlyInSerialization) {
  const auto hops = run_probe_scenario(scenario("paper-probe"));
  const auto& h = hops[1].sizes;
  for (const char* stage : {"switching", "propagation", "rx_sw"}) {
    EXPECT_DOUBLE_EQ(h[0].stage(stage).mean_ns, h[2].stage(stage).mean_ns) << stage;
  }
}

TEST(Probe, LoadedRelayReceiveSideDominates) {
  auto c = scenario("paper-probe");
  c.relay.load_factor = 10.0;
  const auto hops = run_probe_scenario(c);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GT(hops[0].sizes[i].stage("total").mean_ns, hops[1].sizes[i].stage("total").mean_ns);
  }
}

TEST(Probe, UnknownStageThrows) {
  const auto r = run_probe_experiment(LinkModel{}, NodeStageModel{}, NodeStageModel{}, {64}, 2, 1);
  EXPECT_THROW(r[0].stage("warp"), Error);
}

TEST(Sweep, FrameSerializationScalesInverselyWithBandwidth) {
  auto c = scenario("bandwidth-sweep");
  c.sweep.duration_s = 0.2;
  const auto points = run_bandwidth_sweep(c);
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0].serialization, Nanos(28'160'000));
  EXPECT_EQ(points[3].serialization, Nanos(2'816'000));
  EXPECT_NEAR(points[0].protocol_tx_ns, 28.16e6, 1e3);
  EXPECT_NEAR(points[3].protocol_tx_ns, 2.816e6, 1e3);
  for (const auto& p : points) EXPECT_EQ(p.frames_completed, p.frames_sent);
}
