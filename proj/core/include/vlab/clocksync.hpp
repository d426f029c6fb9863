#pragma once

#include <atomic>
#include <cstdint>

#include "vlab/rng.hpp"
#include "vlab/units.hpp"
#include "vlab/wire.hpp"

namespace vlab {

enum class ClockRole { master, slave };

class SyncFailure : public Error {
 public:
  using Error::Error;
};

/// A node's clock relative to the master.
///
/// Offsets follow the convention master_time = local_time + offset, so a
/// slave running 3 ms behind the master has offset +3 ms. `true_offset` is
/// the injected ground truth (simulation only); `estimated_offset` is what
/// the node learned from sync exchanges and is what corrections use.
class NodeClock {
 public:
  NodeClock() = default;
  NodeClock(ClockRole role, Nanos true_offset, double drift_ppm = 0.0);
  NodeClock(const NodeClock& other);
  NodeClock& operator=(const NodeClock& other);

  static NodeClock master() { return NodeClock(ClockRole::master, Nanos(0)); }

  ClockRole role() const { return role_; }
  Nanos true_offset() const { return true_offset_; }
  double drift_ppm() const { return drift_ppm_; }

  Nanos estimated_offset() const { return Nanos(estimated_.load(std::memory_order_acquire)); }
  void set_estimated_offset(Nanos offset);

  /// Local reading at true (master) time `t`.
  Nanos local(Nanos true_time) const;
  /// Inverse of local(), exact when drift is zero.
  Nanos true_time(Nanos local_time) const;
  /// Local timestamp mapped into the master timebase with the estimate.
  Nanos to_master(Nanos local_time) const { return local_time + estimated_offset(); }

 private:
  ClockRole role_ = ClockRole::master;
  Nanos true_offset_{0};
  double drift_ppm_ = 0.0;
  std::atomic<std::int64_t> estimated_{0};
};

/// One-way delays of the dedicated sync network.
struct SyncPath {
  Nanos slave_to_master{50'000};
  Nanos master_to_slave{50'000};
  Nanos master_turnaround{10'000};
  double loss_rate = 0.0;
  std::uint32_t max_retries = 3;
};

struct SyncResult {
  SyncTimestamps timestamps;
  Nanos estimated_offset{0};
  std::uint32_t attempts = 0;
};

/// ((t2 - t1) - (t4 - t3)) / 2
Nanos estimate_offset(const SyncTimestamps& ts);

/// Runs a two-way exchange starting at true time `start` and applies the
/// estimate to `slave`. Lost packets are retried up to path.max_retries
/// times before SyncFailure is thrown.
SyncResult sync_exchange(NodeClock& slave, const NodeClock& master, const SyncPath& path, Nanos start,
                         SeedStream& loss_stream);

struct OneWayDelay {
  Nanos delay{0};
  Nanos raw{0};
  bool anomaly = false;  // raw was negative; delay is clamped to zero
};

/// recv_local - (send_remote + correction), where `correction` maps the
/// sender's timebase onto the receiver's: est_offset(sender) - est_offset(receiver).
OneWayDelay one_way_delay(Nanos recv_local, Nanos send_remote, Nanos correction);

}  // namespace vlab
