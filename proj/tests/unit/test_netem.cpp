#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vlab/netem.hpp"

using namespace vlab;

TEST(EventQueue, EqualTimesFireInInsertionOrder) {
  EventQueue q;
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) q.schedule(Nanos(10), [&order, i] { order.push_back(i); });
  q.schedule(Nanos(5), [&order] { order.push_back(-1); });
  q.run();
  EXPECT_EQ(order, (std::vector<int>{-1, 0, 1, 2, 3, 4}));
}

TEST(EventQueue, EmptyQueueSignalsCompletion) {
  EventQueue q;
  EXPECT_FALSE(q.step().has_value());
  EXPECT_EQ(q.pending(), 0u);
}

TEST(EventQueue, SchedulingInThePastIsALogicError) {
  EventQueue q;
  q.schedule(Nanos(10), [] {});
  q.step();
  EXPECT_THROW(q.schedule(Nanos(9), [] {}), std::logic_error);
}

TEST(EventQueue, HorizonStopsTheRun) {
  EventQueue q;
  int fired = 0;
  q.schedule(Nanos(1), [&] { ++fired; });
  q.schedule(Nanos(100), [&] { ++fired; });
  q.run(Nanos(50));
  EXPECT_EQ(fired, 1);
  EXPECT_EQ(q.pending(), 1u);
}

TEST(EventQueue, MillionRandomEventsReplayIdentically) {
  auto trace = [] {
    EventQueue q;
    SeedStream s(99, "events");
    std::vector<std::pair<std::int64_t, int>> fired;
    fired.reserve(1'000'000);
    for (int i = 0; i < 1'000'000; ++i) {
      q.schedule(Nanos(s.uniform_int(0, 1'000'000)), [&fired, &q, i] { fired.emplace_back(q.now().count(), i); });
    }
    q.run();
    return fired;
  };
  const auto a = trace();
  EXPECT_EQ(a.size(), 1'000'000u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(a, trace());
}

TEST(Netem, StageSumForOneKilobytePacket) {
  LinkModel link;
  link.bandwidth_bps = 10 * kGbps;
  link.distance_km = 1.0;
  link.hops = 2;
  link.switching_min = link.switching_max = Nanos(7'500);
  const NodeStageModel tx{Nanos(2'000), Nanos(1'000), Nanos(0), Nanos(0), 1.0};
  const NodeStageModel rx{Nanos(0), Nanos(0), Nanos(2'000), Nanos(3'000), 1.0};
  LinkStreams streams(1, "x");
  const auto d = packet_delay(link, tx, rx, 1024, streams);
  ASSERT_FALSE(d.lost);
  EXPECT_EQ(d.stages.serialization, Nanos(oracle::serialization_ns(1024 * 8, 10 * kGbps)));
  EXPECT_EQ(d.stages.propagation, Nanos(5'000));
  EXPECT_EQ(d.stages.switching, Nanos(15'000));
  EXPECT_EQ(d.stages.total(), Nanos(820 + 5'000 + 15'000 + 8'000));
  EXPECT_NEAR(to_us(d.stages.total()), 28.8, 0.05);
}

TEST(Netem, ZeroModelsLeaveOnlySerialization) {
  LinkModel link;
  link.bandwidth_bps = kGbps;
  link.hops = 0;
  LinkStreams streams(1, "x");
  const auto d = packet_delay(link, NodeStageModel{}, NodeStageModel{}, 1500, streams);
  EXPECT_EQ(d.stages.total(), Nanos(12'000));
}

TEST(Netem, LoadFactorScalesReceiveSide) {
  const NodeStageModel n{Nanos(1), Nanos(2), Nanos(3'000), Nanos(4'000), 10.0};
  EXPECT_EQ(n.effective_rx_sw(), Nanos(30'000));
  EXPECT_EQ(n.effective_rx_hw(), Nanos(40'000));
}

TEST(Netem, LossRateIsHonouredStatistically) {
  LinkModel m;
  m.loss_rate = 0.01;
  Link link("l", m, 4);
  for (int i = 0; i < 100'000; ++i) link.transmit(Nanos(i * 10'000), 1000, NodeStageModel{}, NodeStageModel{});
  EXPECT_EQ(link.counters().sent, 100'000u);
  EXPECT_EQ(link.counters().lost + link.counters().delivered, 100'000u);
  EXPECT_NEAR(static_cast<double>(link.counters().lost) / 1e5, 0.01, 0.002);
}

TEST(Netem, BusyLinkQueuesBehindThePreviousPacket) {
  LinkModel m;
  m.bandwidth_bps = kGbps;
  m.hops = 0;
  Link link("l", m, 1);
  link.transmit(Nanos(0), 1250, NodeStageModel{}, NodeStageModel{});  // 10 us
  const auto d = link.transmit(Nanos(2'000), 1250, NodeStageModel{}, NodeStageModel{});
  EXPECT_EQ(d.stages.queueing, Nanos(8'000));
}

TEST(Netem, ReorderAddsConfiguredDelay) {
  LinkModel m;
  m.reorder_rate = 1.0;
  m.reorder_delay = Nanos(50'000);
  LinkStreams s(1, "r");
  EXPECT_EQ(packet_delay(m, {}, {}, 100, s).stages.reorder, Nanos(50'000));
}

TEST(Netem, InvalidModelsAreReported) {
  LinkModel m;
  m.loss_rate = 1.5;
  m.bandwidth_bps = 0;
  EXPECT_EQ(m.check().size(), 2u);
  NodeStageModel n;
  n.rx_sw = Nanos(-1);
  EXPECT_EQ(n.check().size(), 1u);
}
