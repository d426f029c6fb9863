#include "vlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vlab {
namespace {

template <typename T>
const T& need(const T* p, const char* source) {
  if (p == nullptr) throw IncompleteRecordError(source);
  return *p;
}

std::string format_mean_ms(double ns) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", ns / 1e6);
  return buf;
}

struct MetricColumn {
  const char* name;
  Nanos (*get)(const FrameLatencyRecord&);
};

const std::vector<MetricColumn>& summary_metrics() {
  static const std::vector<MetricColumn> metrics = {
      {"app_tx", [](const FrameLatencyRecord& r) { return r.app_tx; }},
      {"frame_tx", [](const FrameLatencyRecord& r) { return r.frame_tx; }},
      {"network_l", [](const FrameLatencyRecord& r) { return r.network_l; }},
      {"frame_rx", [](const FrameLatencyRecord& r) { return r.frame_rx; }},
      {"frame_l", [](const FrameLatencyRecord& r) { return r.frame_l; }},
      {"app_rx", [](const FrameLatencyRecord& r) { return r.app_rx; }},
      {"service_l", [](const FrameLatencyRecord& r) { return r.service_l; }},
      {"server_dist", [](const FrameLatencyRecord& r) { return r.server_distribution; }},
      {"protocol_tx1", [](const FrameLatencyRecord& r) { return r.hops[0].protocol_tx; }},
      {"network_l1", [](const FrameLatencyRecord& r) { return r.hops[0].network_l; }},
      {"protocol_rx1", [](const FrameLatencyRecord& r) { return r.hops[0].protocol_rx; }},
      {"protocol_l1", [](const FrameLatencyRecord& r) { return r.hops[0].protocol_l; }},
      {"protocol_tx2", [](const FrameLatencyRecord& r) { return r.hops[1].protocol_tx; }},
      {"network_l2", [](const FrameLatencyRecord& r) { return r.hops[1].network_l; }},
      {"protocol_rx2", [](const FrameLatencyRecord& r) { return r.hops[1].protocol_rx; }},
      {"protocol_l2", [](const FrameLatencyRecord& r) { return r.hops[1].protocol_l; }},
  };
  return metrics;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

bool FrameLatencyRecord::identities_hold() const {
  return service_l == app_tx + frame_l + app_rx && frame_l == network_l + frame_rx &&
         hops[0].protocol_l == hops[0].network_l + hops[0].protocol_rx &&
         hops[1].protocol_l == hops[1].network_l + hops[1].protocol_rx;
}

FrameLatencyRecord assemble_record(const FrameLogs& logs) {
  const auto& app_tx = need(logs.app_tx, "app_tx record");
  const auto& origin = need(logs.origin_send, "sender send log");
  const auto& relay_rx = need(logs.relay_receive, "relay receive log");
  const auto& upstream_complete = need(logs.upstream_complete_ts, "relay distribution log");
  const auto& relay_tx = need(logs.relay_send, "relay send log");
  const auto& final_rx = need(logs.final_receive, "receiver receive log");
  const auto& app_rx = need(logs.app_rx, "app_rx record");
  if (!final_rx.completed) throw IncompleteRecordError("receiver completion");

  const ClockOffsets& off = logs.offsets;
  FrameLatencyRecord r;
  r.frame_id = logs.frame_id;
  r.completed = true;

  r.app_tx = app_tx.app_tx();
  r.frame_tx = origin.protocol_tx();

  const auto hop1_owd = one_way_delay(relay_rx.first_packet_recv_ts, relay_rx.embedded_send_ts_of_first_packet,
                                      off.sender - off.relay);
  r.hops[0].protocol_tx = origin.protocol_tx();
  r.hops[0].network_l = hop1_owd.delay;
  r.hops[0].protocol_rx = relay_rx.protocol_rx();
  r.hops[0].protocol_l = r.hops[0].network_l + r.hops[0].protocol_rx;

  const auto hop2_owd = one_way_delay(final_rx.first_packet_recv_ts, final_rx.embedded_send_ts_of_first_packet,
                                      off.relay - off.receiver);
  r.hops[1].protocol_tx = relay_tx.protocol_tx();
  r.hops[1].network_l = hop2_owd.delay;
  r.hops[1].protocol_rx = final_rx.protocol_rx();
  r.hops[1].protocol_l = r.hops[1].network_l + r.hops[1].protocol_rx;

  const auto e2e_owd =
      one_way_delay(final_rx.first_packet_recv_ts, origin.first_packet_send_ts, off.sender - off.receiver);
  r.network_l = e2e_owd.delay;
  r.frame_rx = final_rx.protocol_rx();
  r.frame_l = r.network_l + r.frame_rx;
  r.app_rx = app_rx.app_rx();
  r.service_l = r.app_tx + r.frame_l + r.app_rx;
  r.server_distribution = relay_tx.last_packet_send_ts - upstream_complete;
  r.retransmit_count = origin.retransmit_count + relay_tx.retransmit_count;
  r.clock_anomaly = hop1_owd.anomaly || hop2_owd.anomaly || e2e_owd.anomaly;
  return r;
}

FrameLatencyRecord dropped_record(std::uint32_t frame_id, std::uint32_t retransmits) {
  FrameLatencyRecord r;
  r.frame_id = frame_id;
  r.retransmit_count = retransmits;
  r.completed = false;
  return r;
}

const MetricStats& RunSummary::metric(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m;
  }
  throw Error("no metric named " + name);
}

Nanos percentile(const std::vector<Nanos>& sorted, double p) {
  if (sorted.empty()) return Nanos(0);
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double jitter(const std::vector<Nanos>& series) {
  if (series.size() < 2) return 0.0;
  long double sum = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    sum += static_cast<long double>(std::llabs((series[i] - series[i - 1]).count()));
  }
  return static_cast<double>(sum / static_cast<long double>(series.size() - 1));
}

RunSummary summarize(const std::vector<FrameLatencyRecord>& records) {
  if (records.empty()) throw EmptyRunError();
  RunSummary s;
  s.frames_sent = records.size();

  std::vector<const FrameLatencyRecord*> done;
  for (const auto& r : records) {
    if (r.completed) {
      done.push_back(&r);
      if (r.clock_anomaly) ++s.clock_anomalies;
    }
  }
  std::sort(done.begin(), done.end(), [](auto* a, auto* b) { return a->frame_id < b->frame_id; });
  s.frames_completed = done.size();
  s.frames_dropped = s.frames_sent - s.frames_completed;

  for (const auto& column : summary_metrics()) {
    MetricStats m;
    m.name = column.name;
    std::vector<Nanos> series;
    series.reserve(done.size());
    for (const auto* r : done) series.push_back(column.get(*r));
    m.count = series.size();
    if (!series.empty()) {
      long double sum = 0;
      for (auto v : series) sum += static_cast<long double>(v.count());
      m.mean_ns = static_cast<double>(sum / static_cast<long double>(series.size()));
      m.jitter_ns = jitter(series);
      std::vector<Nanos> sorted = series;
      std::sort(sorted.begin(), sorted.end());
      m.min = sorted.front();
      m.max = sorted.back();
      m.p50 = percentile(sorted, 50);
      m.p95 = percentile(sorted, 95);
      m.p99 = percentile(sorted, 99);
    }
    s.metrics.push_back(std::move(m));
  }
  return s;
}

const std::vector<std::string>& frame_csv_columns() {
  static const std::vector<std::string> columns = {
      "frame_id",        "app_tx_ms",       "frame_tx_ms",     "network_l_ms",    "frame_rx_ms",
      "frame_l_ms",      "app_rx_ms",       "service_l_ms",    "server_dist_ms",  "protocol_tx1_ms",
      "protocol_rx1_ms", "protocol_l1_ms",  "protocol_tx2_ms", "protocol_rx2_ms", "protocol_l2_ms",
      "retransmits",     "completed",       "network_l1_ms",   "network_l2_ms"};
  return columns;
}

ReportFiles write_report(const std::vector<FrameLatencyRecord>& records, const RunSummary& summary,
                         const std::filesystem::path& dir, const std::string& suffix) {
  if (records.empty()) throw EmptyRunError();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  ReportFiles files{dir / ("frames" + suffix + ".csv"), dir / ("summary" + suffix + ".csv")};

  {
    std::ofstream out(files.frames, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + files.frames.string());
    const auto& cols = frame_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : records) {
      out << r.frame_id << ',' << format_ms(r.app_tx) << ',' << format_ms(r.frame_tx) << ','
          << format_ms(r.network_l) << ',' << format_ms(r.frame_rx) << ',' << format_ms(r.frame_l) << ','
          << format_ms(r.app_rx) << ',' << format_ms(r.service_l) << ',' << format_ms(r.server_distribution)
          << ',' << format_ms(r.hops[0].protocol_tx) << ',' << format_ms(r.hops[0].protocol_rx) << ','
          << format_ms(r.hops[0].protocol_l) << ',' << format_ms(r.hops[1].protocol_tx) << ','
          << format_ms(r.hops[1].protocol_rx) << ',' << format_ms(r.hops[1].protocol_l) << ','
          << r.retransmit_count << ',' << (r.completed ? 1 : 0) << ',' << format_ms(r.hops[0].network_l) << ','
          << format_ms(r.hops[1].network_l) << '\n';
    }
    if (!out) throw Error("write failed: " + files.frames.string());
  }

  {
    std::ofstream out(files.summary, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + files.summary.string());
    out << "metric,stat,value\n";
    for (const auto& m : summary.metrics) {
      const std::string name = m.name + "_ms";
      out << name << ",count," << m.count << '\n';
      out << name << ",mean," << format_mean_ms(m.mean_ns) << '\n';
      out << name << ",p50," << format_ms(m.p50) << '\n';
      out << name << ",p95," << format_ms(m.p95) << '\n';
      out << name << ",p99," << format_ms(m.p99) << '\n';
      out << name << ",min," << format_ms(m.min) << '\n';
      out << name << ",max," << format_ms(m.max) << '\n';
      out << name << ",jitter," << format_mean_ms(m.jitter_ns) << '\n';
    }
    out << "frames,sent," << summary.frames_sent << '\n';
    out << "frames,completed," << summary.frames_completed << '\n';
    out << "frames,dropped," << summary.frames_dropped << '\n';
    out << "frames,clock_anomalies," << summary.clock_anomalies << '\n';
    for (const auto& [key, value] : summary.counters) out << "counter," << key << ',' << value << '\n';
    if (!out) throw Error("write failed: " + files.summary.string());
  }
  return files;
}

Nanos parse_ms(const std::string& text) {
  const bool negative = !text.empty() && text.front() == '-';
  const std::string body = negative ? text.substr(1) : text;
  const auto dot = body.find('.');
  const std::string whole = body.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : body.substr(dot + 1);
  if (whole.empty() || frac.size() > 6) throw Error("not a nanosecond-exact millisecond value: " + text);
  frac.append(6 - frac.size(), '0');
  for (char c : whole + frac) {
    if (c < '0' || c > '9') throw Error("not a millisecond value: " + text);
  }
  const std::int64_t ns = std::stoll(whole) * 1'000'000 + std::stoll(frac);
  return Nanos(negative ? -ns : ns);
}

std::vector<std::string> audit_frames_csv(const std::filesystem::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path);
  if (!in) return {"cannot open " + path.string()};
  std::string line;
  if (!std::getline(in, line)) return {"empty file " + path.string()};
  const auto header = split_csv(line);
  if (header != frame_csv_columns()) problems.push_back(path.string() + ": unexpected header");
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const std::size_t c_app_tx = col("app_tx_ms"), c_net = col("network_l_ms"), c_frx = col("frame_rx_ms"),
                    c_fl = col("frame_l_ms"), c_app_rx = col("app_rx_ms"), c_svc = col("service_l_ms"),
                    c_prx1 = col("protocol_rx1_ms"), c_pl1 = col("protocol_l1_ms"), c_prx2 = col("protocol_rx2_ms"),
                    c_pl2 = col("protocol_l2_ms"), c_n1 = col("network_l1_ms"), c_n2 = col("network_l2_ms");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      problems.push_back("row " + std::to_string(row) + ": wrong column count");
      continue;
    }
    try {
      auto v = [&](std::size_t c) { return parse_ms(cells.at(c)); };
      if (v(c_svc) != v(c_app_tx) + v(c_fl) + v(c_app_rx)) {
        problems.push_back("row " + std::to_string(row) + ": service_l != app_tx + frame_l + app_rx");
      }
      if (v(c_fl) != v(c_net) + v(c_frx)) {
        problems.push_back("row " + std::to_string(row) + ": frame_l != network_l + frame_rx");
      }
      if (v(c_pl1) != v(c_n1) + v(c_prx1)) {
        problems.push_back("row " + std::to_string(row) + ": protocol_l1 != network_l1 + protocol_rx1");
      }
      if (v(c_pl2) != v(c_n2) + v(c_prx2)) {
        problems.push_back("row " + std::to_string(row) + ": protocol_l2 != network_l2 + protocol_rx2");
      }
    } catch (const std::exception& e) {
      problems.push_back("row " + std::to_string(row) + ": " + e.what());
    }
  }
  return problems;
}

}  // namespace vlab
