#include <gtest/gtest.h>

#include "vlab/clocksync.hpp"

using namespace vlab;

namespace {

SyncResult exchange(Nanos offset, Nanos up, Nanos down) {
  NodeClock slave(ClockRole::slave, offset);
  const NodeClock master = NodeClock::master();
  SyncPath path;
  path.slave_to_master = up;
  path.master_to_slave = down;
  path.master_turnaround = Nanos(10'000);
  SeedStream loss(1, "sync");
  return sync_exchange(slave, master, path, Nanos(1'000'000'000), loss);
}

}  // namespace

TEST(ClockSync, SymmetricPathsRecoverTheOffsetExactly) {
  EXPECT_EQ(exchange(Nanos(3'000'000), Nanos(100'000), Nanos(100'000)).estimated_offset, Nanos(3'000'000));
  EXPECT_EQ(exchange(Nanos(-1'234'567), Nanos(100'000), Nanos(100'000)).estimated_offset, Nanos(-1'234'567));
}

TEST(ClockSync, ZeroOffsetEstimatesZero) {
  EXPECT_EQ(exchange(Nanos(0), Nanos(100'000), Nanos(100'000)).estimated_offset, Nanos(0));
}

TEST(ClockSync, AsymmetryBiasesByHalfTheDifference) {
  EXPECT_EQ(exchange(Nanos(0), Nanos(100'000), Nanos(300'000)).estimated_offset, Nanos(-100'000));
}

TEST(ClockSync, FormulaOnHandTimestamps) {
  // Slave 3 ms behind: t1 = 0 local (3 ms master); 100 us up; 10 us turnaround; 100 us down.
  const SyncTimestamps ts{0, 3'100'000, 3'110'000, 210'000};
  EXPECT_EQ(estimate_offset(ts), Nanos(3'000'000));
}

TEST(ClockSync, EstimateIsAppliedToTheSlave) {
  NodeClock slave(ClockRole::slave, Nanos(2'000'000));
  SeedStream loss(1, "sync");
  sync_exchange(slave, NodeClock::master(), SyncPath{}, Nanos(0), loss);
  EXPECT_EQ(slave.estimated_offset(), Nanos(2'000'000));
  EXPECT_EQ(slave.to_master(Nanos(5)), Nanos(2'000'005));
}

TEST(ClockSync, LocalAndTrueTimeAreInverse) {
  const NodeClock c(ClockRole::slave, Nanos(3'000'000));
  EXPECT_EQ(c.local(Nanos(10'000'000)), Nanos(7'000'000));
  EXPECT_EQ(c.true_time(Nanos(7'000'000)), Nanos(10'000'000));
}

TEST(ClockSync, TotalLossRaisesSyncFailure) {
  NodeClock slave(ClockRole::slave, Nanos(1));
  SyncPath path;
  path.loss_rate = 1.0;
  path.max_retries = 2;
  SeedStream loss(1, "sync");
  EXPECT_THROW(sync_exchange(slave, NodeClock::master(), path, Nanos(0), loss), SyncFailure);
}

TEST(OneWayDelay, PlainDifference) {
  const auto d = one_way_delay(Nanos(1'000'000), Nanos(900'000), Nanos(0));
  EXPECT_EQ(d.delay, Nanos(100'000));
  EXPECT_FALSE(d.anomaly);
}

TEST(OneWayDelay, OverCorrectionIsFlagged) {
  const auto d = one_way_delay(Nanos(1'000'000), Nanos(900'000), Nanos(150'000));
  EXPECT_TRUE(d.anomaly);
  EXPECT_EQ(d.delay, Nanos(0));
  EXPECT_EQ(d.raw, Nanos(-50'000));
}

TEST(OneWayDelay, InjectedOffsetInflatesUncorrectedDelay) {
  // Sender 2 ms behind master: its stamps read 2 ms low.
  const Nanos true_send(10'000'000), true_delay(150'000), offset(2'000'000);
  const NodeClock sender(ClockRole::slave, offset);
  const NodeClock receiver = NodeClock::master();
  const Nanos stamp = sender.local(true_send);
  const Nanos recv = receiver.local(true_send + true_delay);
  EXPECT_EQ(one_way_delay(recv, stamp, Nanos(0)).delay, true_delay + offset);
  EXPECT_EQ(one_way_delay(recv, stamp, offset - Nanos(0)).delay, true_delay);
}
