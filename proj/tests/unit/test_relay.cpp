#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vlab/pipeline.hpp"
#include "vlab/relay.hpp"

using namespace vlab;

namespace {

struct RelayRun {
  std::vector<std::vector<Emission>> out;
};

// Feeds `input` (already stamped emissions) into the relay with zero link
// delay and runs it until every queue is empty.
RelayRun drive(RelayNode& relay, const std::vector<Emission>& input) {
  RelayRun run;
  run.out.resize(relay.receivers());
  Nanos now{0};
  std::size_t i = 0;
  for (;;) {
    std::optional<Nanos> next;
    auto consider = [&next](std::optional<Nanos> t) {
      if (t && (!next || *t < *next)) next = t;
    };
    if (i < input.size()) consider(input[i].start);
    consider(relay.next_timer());
    for (std::size_t k = 0; k < relay.receivers(); ++k) consider(relay.next_emission_time(k, now));
    if (!next) break;
    now = std::max(now, *next);
    while (i < input.size() && input[i].start <= now) relay.on_packet(input[i++].packet, now);
    if (auto t = relay.next_timer(); t && *t <= now) relay.on_timer(now);
    for (std::size_t k = 0; k < relay.receivers(); ++k) {
      if (auto t = relay.next_emission_time(k, now); t && *t <= now) run.out[k].push_back(*relay.emit(k, now));
    }
  }
  return run;
}

std::vector<Emission> send_frames(std::uint32_t frames, std::uint64_t bytes, std::uint64_t rate = 10 * kGbps) {
  SenderConfig c;
  c.pacing_rate_bps = rate;
  SenderEndpoint s(c);
  std::vector<Emission> out;
  Nanos now{0};
  for (std::uint32_t id = 1; id <= frames; ++id) {
    s.enqueue_frame(make_synthetic_frame(id, {bytes, 0, 0}, 2), now);
    while (auto t = s.next_emission_time(now)) {
      now = std::max(now, *t);
      out.push_back(*s.emit(now));
    }
    now += Nanos(33'333'333);
  }
  return out;
}

RelayConfig relay_config(std::size_t receivers, std::uint64_t rate = 1'500'000'000) {
  RelayConfig c;
  for (std::size_t k = 0; k < receivers; ++k) {
    SenderConfig d;
    d.pacing_rate_bps = rate;
    c.downstream.push_back(d);
  }
  c.seed = 17;
  return c;
}

SharedBytes reassemble(const std::vector<Emission>& packets, std::uint32_t fid) {
  ReceiverEndpoint r(ReceiverConfig{});
  for (const auto& e : packets) {
    auto ev = r.on_packet(e.packet, e.start);
    if (ev.frame && ev.frame->frame_id == fid) return ev.frame->payload;
  }
  return {};
}

Nanos distribution_with(const StallModel& stall) {
  auto c = relay_config(1);
  c.policy = ForwardPolicy::store_and_forward;
  c.stall = stall;
  RelayNode relay(c);
  drive(relay, send_frames(1, 300'000));
  return *relay.distribution(1)->distribution_time(0);
}

}  // namespace

TEST(Relay, PolicyNamesParse) {
  EXPECT_EQ(parse_forward_policy("cut-through"), ForwardPolicy::cut_through);
  EXPECT_EQ(parse_forward_policy("store_and_forward"), ForwardPolicy::store_and_forward);
  EXPECT_THROW(parse_forward_policy("teleport"), ConfigError);
}

TEST(Relay, StoreAndForwardDistributionIsDownstreamSerialization) {
  auto c = relay_config(1);
  c.policy = ForwardPolicy::store_and_forward;
  RelayNode relay(c);
  const auto run = drive(relay, send_frames(1, 3'520'000));
  const auto d = relay.distribution(1)->distribution_time(0);
  ASSERT_TRUE(d);
  EXPECT_EQ(*d, Nanos(oracle::serialization_ns(3'520'000ULL * 8, 1'500'000'000)));
  EXPECT_NEAR(to_ms(*d), 18.77, 0.01);
  EXPECT_EQ(reassemble(run.out[0], 1), make_synthetic_frame(1, {3'520'000, 0, 0}, 2).payload);
}

TEST(Relay, CutThroughStartsForwardingBeforeUpstreamCompletes) {
  RelayNode relay(relay_config(1));
  drive(relay, send_frames(1, 1'000'000));
  const auto* e = relay.distribution(1);
  ASSERT_TRUE(e && e->upstream_complete_ts && e->forward_start_ts[0]);
  EXPECT_LT(*e->forward_start_ts[0], *e->upstream_complete_ts);
}

TEST(Relay, TwoReceiversGetIdenticalBytesOnIndependentSchedules) {
  const auto input = send_frames(2, 400'000);
  RelayNode both(relay_config(2));
  const auto run = drive(both, input);
  for (std::uint32_t fid : {1u, 2u}) {
    const auto expect = make_synthetic_frame(fid, {400'000, 0, 0}, 2).payload;
    EXPECT_EQ(reassemble(run.out[0], fid), expect);
    EXPECT_EQ(reassemble(run.out[1], fid), expect);
  }

  auto slow = relay_config(2);
  slow.downstream[1].pacing_rate_bps = 100'000'000;
  RelayNode mixed(slow);
  const auto run2 = drive(mixed, input);
  ASSERT_EQ(run2.out[0].size(), run.out[0].size());
  for (std::size_t i = 0; i < run.out[0].size(); ++i) EXPECT_EQ(run2.out[0][i].start, run.out[0][i].start);
  EXPECT_GT(run2.out[1].back().start, run.out[1].back().start);
}

TEST(Relay, CertainStallAddsItsDuration) {
  const Nanos base = distribution_with(StallModel{});
  const Nanos stalled = distribution_with(StallModel{1.0, DurationDist::fixed(Nanos(5'000'000))});
  EXPECT_EQ(stalled - base, Nanos(5'000'000));
}

TEST(Relay, ZeroProbabilityOrZeroLengthStallChangesNothing) {
  const Nanos base = distribution_with(StallModel{});
  EXPECT_EQ(distribution_with(StallModel{0.0, DurationDist::fixed(Nanos(8'000'000))}), base);
  EXPECT_EQ(distribution_with(StallModel{1.0, DurationDist::uniform(Nanos(0), Nanos(0))}), base);
}

TEST(Relay, StalledFrameCountIsSeededAndMatchesTheDecisionStream) {
  auto run_once = [] {
    auto c = relay_config(1, 10 * kGbps);
    c.stall = StallModel{0.1, DurationDist::fixed(Nanos(8'000'000))};
    RelayNode relay(c);
    drive(relay, send_frames(300, 1000));
    return relay.stats().frames_stalled;
  };
  const auto a = run_once();
  EXPECT_EQ(a, run_once());
  SeedStream decisions(17, "relay/stall");
  std::uint64_t expected = 0;
  for (int i = 0; i < 300; ++i) expected += decisions.bernoulli(0.1) ? 1 : 0;
  EXPECT_EQ(a, expected);
  EXPECT_GE(a, 15u);
  EXPECT_LE(a, 45u);
}

TEST(Relay, InvalidStallIsRejected) {
  RelayNode relay(relay_config(1));
  EXPECT_THROW(relay.inject_stall(StallModel{1.5, DurationDist::fixed(Nanos(1))}), ConfigError);
}

TEST(Relay, SegmentProcessingDelaysForwarding) {
  auto c = relay_config(1);
  c.policy = ForwardPolicy::store_and_forward;
  const Nanos base = distribution_with(StallModel{});
  c.segment_processing = Nanos(880'000);
  RelayNode relay(c);
  drive(relay, send_frames(1, 300'000));
  EXPECT_EQ(*relay.distribution(1)->distribution_time(0) - base, Nanos(880'000));
}
