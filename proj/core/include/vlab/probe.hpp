#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vlab/config.hpp"
#include "vlab/metrics.hpp"
#include "vlab/netem.hpp"

namespace vlab {

struct StageStats {
  std::string stage;
  double mean_ns = 0.0;
  Nanos p50{0};
  Nanos p99{0};
};

struct ProbeSizeResult {
  std::size_t packet_bytes = 0;
  std::size_t samples = 0;
  std::size_t lost = 0;
  std::vector<StageStats> stages;  // per stage, then "total"

  const StageStats& stage(const std::string& name) const;
};

/// Sends `samples` probes of each size across an idle hop. Every size draws
/// from the same seeded streams, so sizes differ only where the size matters.
std::vector<ProbeSizeResult> run_probe_experiment(const LinkModel& link, const NodeStageModel& node_tx,
                                                  const NodeStageModel& node_rx,
                                                  const std::vector<std::size_t>& packet_sizes,
                                                  std::size_t samples_per_size, std::uint64_t seed,
                                                  const std::string& link_name = "probe");

struct ProbeHopResult {
  std::string hop;
  std::vector<ProbeSizeResult> sizes;
};

/// hop1: sender -> relay, hop2: relay -> receiver.
std::vector<ProbeHopResult> run_probe_scenario(const ScenarioConfig& config);

/// probe.csv (hop, size, stage statistics) and summary.csv.
std::vector<std::filesystem::path> write_probe_report(const std::vector<ProbeHopResult>& hops,
                                                      const std::filesystem::path& dir);

struct SweepPoint {
  std::uint64_t bandwidth_bps = 0;
  Nanos serialization{0};  // whole frame as one unit
  double protocol_tx_ns = 0.0;
  double frame_rx_ns = 0.0;
  double frame_l_ns = 0.0;
  double service_l_ns = 0.0;
  std::uint64_t frames_completed = 0;
  std::uint64_t frames_sent = 0;
};

/// One pipeline run per bandwidth with both hops paced at that rate.
std::vector<SweepPoint> run_bandwidth_sweep(const ScenarioConfig& config);

std::vector<std::filesystem::path> write_sweep_report(const std::vector<SweepPoint>& points,
                                                      const std::filesystem::path& dir);

}  // namespace vlab
