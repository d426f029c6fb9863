#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <map>
#include <string>
#include <vector>

#include "vlab/config.hpp"
#include "vlab/metrics.hpp"
#include "vlab/netem.hpp"
#include "vlab/relay.hpp"

namespace vlab {

constexpr std::uint8_t kPipelineStreamId = 1;

SenderConfig make_sender_config(const ScenarioConfig& config, std::uint64_t pacing_bps, std::uint32_t overhead);
ReceiverConfig make_receiver_config(const ScenarioConfig& config);
RelayConfig make_relay_config(const ScenarioConfig& config);

/// One datagram crossing one emulated link.
struct PacketTrace {
  std::string link;  // "hop1", "hop1-back", "hop2.<k>", "hop2.<k>-back"
  PacketType type = PacketType::data;
  std::uint32_t frame_id = 0;
  std::uint16_t segment = 0;
  std::uint16_t seq = 0;
  bool retransmit = false;
  bool lost = false;
  StageBreakdown stages;
  Nanos true_send{0};     // emission instant, master timebase
  Nanos true_recv{0};     // arrival instant, master timebase (unset when lost)
  Nanos embedded_send{0}; // sender's local stamp carried in the header
  Nanos recv_local{0};    // receiver's local clock at arrival
  Nanos correction{0};    // est_offset(sender) - est_offset(receiver)
};

using PacketObserver = std::function<void(const PacketTrace&)>;

struct ReceiverOutcome {
  std::vector<FrameLatencyRecord> records;  // one per frame sent, in frame order
  RunSummary summary;
  std::uint64_t frames_intact = 0;
  std::uint64_t frames_corrupt = 0;
  ReceiverStats stats;
};

struct PipelineResult {
  std::uint64_t frames_sent = 0;
  std::vector<ReceiverOutcome> receivers;
  std::vector<AppTxRecord> app_tx;
  SenderStats sender;
  RelayStats relay;
  ReceiverStats relay_upstream;
  std::map<std::uint32_t, DistributionEntry> distribution;
  std::vector<std::pair<std::string, LinkCounters>> links;
  ClockOffsets final_offsets;
  std::uint64_t capture_overruns = 0;
  std::uint64_t sync_exchanges = 0;
  std::uint64_t malformed_packets = 0;
  std::uint64_t events = 0;
  bool horizon_reached = false;
};

/// Runs sender -> relay -> receivers in virtual time. Deterministic in
/// (config, seed). The observer, when set, sees every datagram.
PipelineResult run_pipeline(const ScenarioConfig& config, const PacketObserver& observer = {});

/// Writes frames.csv / summary.csv for receiver 0 and
/// frames_receiver<k>.csv / summary_receiver<k>.csv for the others.
std::vector<ReportFiles> write_pipeline_report(const PipelineResult& result, const std::filesystem::path& dir);

/// CSV sink for PacketTrace rows.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void operator()(const PacketTrace& trace);

 private:
  std::shared_ptr<std::ofstream> out_;
};

}  // namespace vlab
