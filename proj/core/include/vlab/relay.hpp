#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlab/app_emu.hpp"
#include "vlab/rng.hpp"
#include "vlab/transport.hpp"

namespace vlab {

enum class ForwardPolicy { cut_through, store_and_forward };

ForwardPolicy parse_forward_policy(const std::string& text);
std::string to_string(ForwardPolicy policy);

/// Optional processing stall: with probability `probability` a frame is held
/// for a sampled duration before any of it is forwarded.
struct StallModel {
  double probability = 0.0;
  DurationDist duration = DurationDist::fixed(Nanos(0));

  std::vector<std::string> check() const;
};

struct RelayConfig {
  ReceiverConfig upstream;
  std::vector<SenderConfig> downstream;  // one per receiver, fixed order
  ForwardPolicy policy = ForwardPolicy::cut_through;
  // Fixed per-segment handling latency inside the server.
  Nanos segment_processing{0};
  StallModel stall;
  std::size_t queue_high_water = 1'000'000;  // packets per downstream queue
  std::uint64_t seed = 0;
};

struct DistributionEntry {
  std::uint32_t frame_id = 0;
  std::optional<Nanos> upstream_complete_ts;
  std::vector<std::optional<Nanos>> forward_start_ts;  // per receiver
  std::vector<std::optional<Nanos>> forward_end_ts;
  Nanos stall{0};

  /// forward_end - upstream_complete for one receiver, once both are known.
  std::optional<Nanos> distribution_time(std::size_t receiver) const;
};

struct RelayStats {
  std::uint64_t segments_forwarded = 0;
  std::uint64_t frames_stalled = 0;
  std::uint64_t backpressure_events = 0;
};

struct RelayEvent {
  // Packets for the upstream sender (NACKs, FRAME_ACKs).
  std::vector<ControlPacket> upstream_control;
  std::optional<CompletedFrame> completed;
};

/// The fan-out server: one upstream receiver feeding one paced sender per
/// downstream receiver. Sans-IO like the endpoints it wraps.
class RelayNode {
 public:
  explicit RelayNode(RelayConfig config);

  const RelayConfig& config() const { return config_; }
  std::size_t receivers() const { return downstream_.size(); }

  /// Replaces the stall model for subsequent frames.
  void inject_stall(const StallModel& stall);

  RelayEvent on_packet(const DataPacket& packet, Nanos now);

  /// Hands one reassembled segment (or, with store-and-forward, the whole
  /// frame's segments at once) to the forwarding stage.
  void forward(const Segment& segment, Nanos now);

  std::optional<Nanos> next_timer() const;
  /// Moves ready segments to the downstream senders and runs upstream
  /// reassembly timers.
  RelayEvent on_timer(Nanos now, std::vector<std::uint32_t>* dropped = nullptr);

  std::optional<Nanos> next_emission_time(std::size_t receiver, Nanos now) const;
  std::optional<Emission> emit(std::size_t receiver, Nanos now);
  void on_downstream_control(std::size_t receiver, const ControlPacket& control, Nanos now);
  std::optional<Nanos> next_downstream_timer(std::size_t receiver) const;
  void on_downstream_timer(std::size_t receiver, Nanos now);

  const ReceiverEndpoint& upstream() const { return upstream_; }
  const SenderEndpoint& downstream(std::size_t receiver) const { return downstream_.at(receiver); }
  const DistributionEntry* distribution(std::uint32_t frame_id) const;
  const std::map<std::uint32_t, DistributionEntry>& distribution_log() const { return log_; }
  const RelayStats& stats() const { return stats_; }

 private:
  struct Pending {
    Nanos ready;
    Segment segment;
  };

  DistributionEntry& entry(std::uint32_t frame_id);
  Nanos stall_for(std::uint32_t frame_id);
  void release(Nanos now);
  void absorb(RxEvent&& ev, Nanos now, RelayEvent& out);

  RelayConfig config_;
  ReceiverEndpoint upstream_;
  std::vector<SenderEndpoint> downstream_;
  SeedStream stall_decision_;
  SeedStream stall_duration_;
  std::map<std::uint32_t, Nanos> stall_by_frame_;
  std::map<std::uint32_t, std::vector<Segment>> held_;  // store-and-forward buffer
  std::deque<Pending> pending_;
  Nanos last_ready_{Nanos::min()};
  std::map<std::uint32_t, DistributionEntry> log_;
  RelayStats stats_;
};

}  // namespace vlab
