#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vlab/app_emu.hpp"
#include "vlab/clocksync.hpp"
#include "vlab/transport.hpp"
#include "vlab/units.hpp"

namespace vlab {

class IncompleteRecordError : public Error {
 public:
  explicit IncompleteRecordError(std::string source)
      : Error("incomplete record: missing " + source), source_(std::move(source)) {}
  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

class EmptyRunError : public Error {
 public:
  EmptyRunError() : Error("empty run: no frame records") {}
};

/// Protocol-layer timing of one hop.
struct HopTiming {
  Nanos protocol_tx{0};
  Nanos network_l{0};
  Nanos protocol_rx{0};
  Nanos protocol_l{0};  // network_l + protocol_rx
};

/// Layered latencies of one frame as seen by one receiver.
///
///   service_l = app_tx + frame_l + app_rx
///   frame_l   = network_l + frame_rx
///   protocol_l = network_l + protocol_rx   (per hop)
struct FrameLatencyRecord {
  std::uint32_t frame_id = 0;
  Nanos app_tx{0};
  Nanos frame_tx{0};
  Nanos network_l{0};
  Nanos frame_rx{0};
  Nanos frame_l{0};
  Nanos app_rx{0};
  Nanos service_l{0};
  Nanos server_distribution{0};
  std::array<HopTiming, 2> hops{};
  std::uint32_t retransmit_count = 0;
  bool completed = false;
  bool clock_anomaly = false;

  bool identities_hold() const;
};

/// Estimated offsets (master_time = local + offset) in effect for a frame.
struct ClockOffsets {
  Nanos sender{0};
  Nanos relay{0};
  Nanos receiver{0};
};

/// Everything known about one frame on its way sender -> relay -> receiver.
/// Null pointers mean the corresponding log entry is missing.
struct FrameLogs {
  std::uint32_t frame_id = 0;
  const AppTxRecord* app_tx = nullptr;
  const SendLogEntry* origin_send = nullptr;     // sender, hop 1
  const ReceiveLogEntry* relay_receive = nullptr;  // relay upstream, hop 1
  const Nanos* upstream_complete_ts = nullptr;   // relay
  const SendLogEntry* relay_send = nullptr;      // relay downstream, hop 2
  const ReceiveLogEntry* final_receive = nullptr;  // receiver, hop 2
  const AppRxRecord* app_rx = nullptr;
  ClockOffsets offsets;
};

/// Builds the layered record of a completed frame. Throws
/// IncompleteRecordError naming the first missing source.
FrameLatencyRecord assemble_record(const FrameLogs& logs);

/// Row for a frame that never completed at the receiver: latencies zero.
FrameLatencyRecord dropped_record(std::uint32_t frame_id, std::uint32_t retransmits);

struct MetricStats {
  std::string name;
  std::size_t count = 0;
  double mean_ns = 0.0;
  Nanos p50{0};
  Nanos p95{0};
  Nanos p99{0};
  Nanos min{0};
  Nanos max{0};
  double jitter_ns = 0.0;  // mean |x[i] - x[i-1]| over successive frames
};

struct RunSummary {
  std::vector<MetricStats> metrics;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_completed = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t clock_anomalies = 0;
  // Extra run-level counts (per-hop packets, retransmissions, ...), in
  // insertion order.
  std::vector<std::pair<std::string, std::uint64_t>> counters;

  const MetricStats& metric(const std::string& name) const;
};

/// Nearest-rank percentile of sorted values, p in (0, 100].
Nanos percentile(const std::vector<Nanos>& sorted, double p);

/// Mean absolute successive difference.
double jitter(const std::vector<Nanos>& series);

/// Statistics over completed frames; dropped ones are only counted.
RunSummary summarize(const std::vector<FrameLatencyRecord>& records);

/// Column order of the per-frame CSV.
const std::vector<std::string>& frame_csv_columns();

struct ReportFiles {
  std::filesystem::path frames;
  std::filesystem::path summary;
};

/// Writes <dir>/frames<suffix>.csv and <dir>/summary<suffix>.csv. Durations
/// are milliseconds with six decimals (exact nanoseconds).
ReportFiles write_report(const std::vector<FrameLatencyRecord>& records, const RunSummary& summary,
                         const std::filesystem::path& dir, const std::string& suffix = "");

/// Re-checks the latency identities on every row of a per-frame CSV in
/// integer nanoseconds. Returns one message per violation.
std::vector<std::string> audit_frames_csv(const std::filesystem::path& path);

/// "12.345678" -> 12345678 ns, exact.
Nanos parse_ms(const std::string& text);

}  // namespace vlab
