#include "vlab/clocksync.hpp"

#include <cmath>

namespace vlab {

NodeClock::NodeClock(ClockRole role, Nanos true_offset, double drift_ppm)
    : role_(role),
      true_offset_(role == ClockRole::master ? Nanos(0) : true_offset),
      drift_ppm_(role == ClockRole::master ? 0.0 : drift_ppm) {}

NodeClock::NodeClock(const NodeClock& other)
    : role_(other.role_),
      true_offset_(other.true_offset_),
      drift_ppm_(other.drift_ppm_),
      estimated_(other.estimated_.load(std::memory_order_acquire)) {}

NodeClock& NodeClock::operator=(const NodeClock& other) {
  role_ = other.role_;
  true_offset_ = other.true_offset_;
  drift_ppm_ = other.drift_ppm_;
  estimated_.store(other.estimated_.load(std::memory_order_acquire), std::memory_order_release);
  return *this;
}

void NodeClock::set_estimated_offset(Nanos offset) {
  if (role_ == ClockRole::master) offset = Nanos(0);
  estimated_.store(offset.count(), std::memory_order_release);
}

Nanos NodeClock::local(Nanos t) const {
  Nanos drift{0};
  if (drift_ppm_ != 0.0) drift = Nanos(std::llround(static_cast<double>(t.count()) * drift_ppm_ * 1e-6));
  return t - true_offset_ + drift;
}

Nanos NodeClock::true_time(Nanos local_time) const {
  const Nanos base = local_time + true_offset_;
  if (drift_ppm_ == 0.0) return base;
  return Nanos(std::llround(static_cast<double>(base.count()) / (1.0 + drift_ppm_ * 1e-6)));
}

Nanos estimate_offset(const SyncTimestamps& ts) {
  const auto t1 = static_cast<std::int64_t>(ts.t1);
  const auto t2 = static_cast<std::int64_t>(ts.t2);
  const auto t3 = static_cast<std::int64_t>(ts.t3);
  const auto t4 = static_cast<std::int64_t>(ts.t4);
  return Nanos(((t2 - t1) - (t4 - t3)) / 2);
}

SyncResult sync_exchange(NodeClock& slave, const NodeClock& master, const SyncPath& path, Nanos start,
                         SeedStream& loss_stream) {
  SyncResult result;
  Nanos t = start;
  const Nanos retry_after = path.slave_to_master + path.master_turnaround + path.master_to_slave;
  for (std::uint32_t attempt = 0; attempt <= path.max_retries; ++attempt) {
    ++result.attempts;
    const bool req_lost = loss_stream.bernoulli(path.loss_rate);
    const bool resp_lost = loss_stream.bernoulli(path.loss_rate);
    if (req_lost || resp_lost) {
      t += retry_after * 2;
      continue;
    }
    const Nanos at_master = t + path.slave_to_master;
    const Nanos master_send = at_master + path.master_turnaround;
    const Nanos at_slave = master_send + path.master_to_slave;
    auto stamp = [](Nanos v) { return static_cast<std::uint64_t>(v.count()); };
    result.timestamps.t1 = stamp(slave.local(t));
    result.timestamps.t2 = stamp(master.local(at_master));
    result.timestamps.t3 = stamp(master.local(master_send));
    result.timestamps.t4 = stamp(slave.local(at_slave));
    result.estimated_offset = estimate_offset(result.timestamps);
    slave.set_estimated_offset(result.estimated_offset);
    return result;
  }
  throw SyncFailure("sync exchange failed after " + std::to_string(result.attempts) + " attempts");
}

OneWayDelay one_way_delay(Nanos recv_local, Nanos send_remote, Nanos correction) {
  OneWayDelay d;
  d.raw = recv_local - (send_remote + correction);
  if (d.raw.count() < 0) {
    d.anomaly = true;
    d.delay = Nanos(0);
  } else {
    d.delay = d.raw;
  }
  return d;
}

}  // namespace vlab
