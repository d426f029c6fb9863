#include "vlab/probe.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "vlab/pipeline.hpp"

namespace vlab {
namespace {

using StageGetter = Nanos (*)(const StageBreakdown&);

const std::vector<std::pair<const char*, StageGetter>>& stage_getters() {
  static const std::vector<std::pair<const char*, StageGetter>> getters = {
      {"tx_sw", [](const StageBreakdown& s) { return s.tx_sw; }},
      {"tx_hw", [](const StageBreakdown& s) { return s.tx_hw; }},
      {"queueing", [](const StageBreakdown& s) { return s.queueing; }},
      {"serialization", [](const StageBreakdown& s) { return s.serialization; }},
      {"propagation", [](const StageBreakdown& s) { return s.propagation; }},
      {"switching", [](const StageBreakdown& s) { return s.switching; }},
      {"reorder", [](const StageBreakdown& s) { return s.reorder; }},
      {"rx_hw", [](const StageBreakdown& s) { return s.rx_hw; }},
      {"rx_sw", [](const StageBreakdown& s) { return s.rx_sw; }},
      {"total", [](const StageBreakdown& s) { return s.total(); }},
  };
  return getters;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

const StageStats& ProbeSizeResult::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.stage == name) return s;
  }
  throw Error("no stage named " + name);
}

std::vector<ProbeSizeResult> run_probe_experiment(const LinkModel& link, const NodeStageModel& node_tx,
                                                  const NodeStageModel& node_rx,
                                                  const std::vector<std::size_t>& packet_sizes,
                                                  std::size_t samples_per_size, std::uint64_t seed,
                                                  const std::string& link_name) {
  if (packet_sizes.empty()) throw ConfigError("probe needs at least one packet size");
  if (samples_per_size == 0) throw ConfigError("probe needs at least one sample per size");
  std::vector<ProbeSizeResult> results;
  for (std::size_t size : packet_sizes) {
    LinkStreams streams(seed, link_name);
    std::vector<StageBreakdown> delivered;
    delivered.reserve(samples_per_size);
    ProbeSizeResult r;
    r.packet_bytes = size;
    r.samples = samples_per_size;
    for (std::size_t i = 0; i < samples_per_size; ++i) {
      const PacketDelay d = packet_delay(link, node_tx, node_rx, size, streams);
      if (d.lost) {
        ++r.lost;
      } else {
        delivered.push_back(d.stages);
      }
    }
    for (const auto& [name, get] : stage_getters()) {
      StageStats st;
      st.stage = name;
      std::vector<Nanos> values;
      values.reserve(delivered.size());
      long double sum = 0;
      for (const auto& s : delivered) {
        values.push_back(get(s));
        sum += values.back().count();
      }
      std::sort(values.begin(), values.end());
      if (!values.empty()) {
        st.mean_ns = static_cast<double>(sum / values.size());
        st.p50 = percentile(values, 50);
        st.p99 = percentile(values, 99);
      }
      r.stages.push_back(std::move(st));
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<ProbeHopResult> run_probe_scenario(const ScenarioConfig& c) {
  return {
      {"hop1", run_probe_experiment(c.hop1.link, c.sender, c.relay, c.probe.sizes, c.probe.samples, c.seed, "hop1")},
      {"hop2",
       run_probe_experiment(c.hop2.link, c.relay, c.receiver, c.probe.sizes, c.probe.samples, c.seed, "hop2")},
  };
}

std::vector<std::filesystem::path> write_probe_report(const std::vector<ProbeHopResult>& hops,
                                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto probe_path = dir / "probe.csv";
  const auto summary_path = dir / "summary.csv";
  {
    auto out = open_out(probe_path);
    out << "hop,packet_bytes,stage,mean_us,p50_us,p99_us\n";
    for (const auto& hop : hops) {
      for (const auto& size : hop.sizes) {
        for (const auto& st : size.stages) {
          out << hop.hop << ',' << size.packet_bytes << ',' << st.stage << ',' << fixed(st.mean_ns / 1e3, 3) << ','
              << fixed(to_us(st.p50), 3) << ',' << fixed(to_us(st.p99), 3) << '\n';
        }
      }
    }
  }
  {
    auto out = open_out(summary_path);
    out << "metric,stat,value\n";
    for (const auto& hop : hops) {
      for (const auto& size : hop.sizes) {
        const std::string name = hop.hop + "_total_" + std::to_string(size.packet_bytes) + "B_us";
        const auto& total = size.stage("total");
        out << name << ",mean," << fixed(total.mean_ns / 1e3, 3) << '\n';
        out << name << ",p50," << fixed(to_us(total.p50), 3) << '\n';
        out << name << ",p99," << fixed(to_us(total.p99), 3) << '\n';
        out << name << ",lost," << size.lost << '\n';
      }
    }
  }
  return {probe_path, summary_path};
}

std::vector<SweepPoint> run_bandwidth_sweep(const ScenarioConfig& config) {
  std::vector<SweepPoint> points;
  for (std::uint64_t bw : config.sweep.bandwidths_bps) {
    ScenarioConfig c = config;
    c.experiment = Experiment::pipeline;
    c.duration_s = config.sweep.duration_s;
    c.hop1.pacing_bps = bw;
    c.hop2.pacing_bps = bw;
    c.hop1.link.bandwidth_bps = bw;
    c.hop2.link.bandwidth_bps = bw;
    c.relay_node.receiver_pacing_bps.clear();
    const PipelineResult r = run_pipeline(c);
    const RunSummary& s = r.receivers.front().summary;

    SweepPoint p;
    p.bandwidth_bps = bw;
    p.serialization = serialization_time(c.capture.sections.total() * 8, bw);
    p.protocol_tx_ns = s.metric("protocol_tx1").mean_ns;
    p.frame_rx_ns = s.metric("frame_rx").mean_ns;
    p.frame_l_ns = s.metric("frame_l").mean_ns;
    p.service_l_ns = s.metric("service_l").mean_ns;
    p.frames_completed = s.frames_completed;
    p.frames_sent = s.frames_sent;
    points.push_back(p);
  }
  return points;
}

std::vector<std::filesystem::path> write_sweep_report(const std::vector<SweepPoint>& points,
                                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto sweep_path = dir / "sweep.csv";
  const auto summary_path = dir / "summary.csv";
  {
    auto out = open_out(sweep_path);
    out << "bandwidth_bps,serialization_ms,protocol_tx_ms,frame_rx_ms,frame_l_ms,service_l_ms,frames_completed,"
           "frames_sent\n";
    for (const auto& p : points) {
      out << p.bandwidth_bps << ',' << format_ms(p.serialization) << ',' << fixed(p.protocol_tx_ns / 1e6, 6) << ','
          << fixed(p.frame_rx_ns / 1e6, 6) << ',' << fixed(p.frame_l_ns / 1e6, 6) << ','
          << fixed(p.service_l_ns / 1e6, 6) << ',' << p.frames_completed << ',' << p.frames_sent << '\n';
    }
  }
  {
    auto out = open_out(summary_path);
    out << "metric,stat,value\n";
    for (const auto& p : points) {
      const std::string prefix = "bw_" + std::to_string(p.bandwidth_bps);
      out << prefix << "_protocol_tx_ms,mean," << fixed(p.protocol_tx_ns / 1e6, 6) << '\n';
      out << prefix << "_frame_l_ms,mean," << fixed(p.frame_l_ns / 1e6, 6) << '\n';
      out << prefix << "_frames,completed," << p.frames_completed << '\n';
    }
  }
  return {sweep_path, summary_path};
}

}  // namespace vlab
