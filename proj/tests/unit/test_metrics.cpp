#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vlab/metrics.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

struct LogSet {
  AppTxRecord app_tx;
  SendLogEntry origin;
  ReceiveLogEntry relay_rx;
  Nanos upstream_complete{0};
  SendLogEntry relay_tx;
  ReceiveLogEntry final_rx;
  AppRxRecord app_rx;

  FrameLogs view(ClockOffsets offsets = {}) const {
    return FrameLogs{1, &app_tx, &origin, &relay_rx, &upstream_complete, &relay_tx, &final_rx, &app_rx, offsets};
  }
};

// Capture 7.3 ms, first byte after 1.2 ms, reassembly 19.5 ms, render 22 ms.
LogSet reference_logs() {
  LogSet l;
  l.app_tx = {1, Nanos(0), Nanos(7'300'000), false};
  l.origin = {1, Nanos(7'300'000), Nanos(22'100'000), 10, 0, 1000, true};
  l.relay_rx = {1, Nanos(7'800'000), Nanos(22'600'000), Nanos(7'300'000), 0, 10, 0, true, false};
  l.upstream_complete = Nanos(22'600'000);
  l.relay_tx = {1, Nanos(8'000'000), Nanos(23'000'000), 10, 0, 1000, true};
  l.final_rx = {1, Nanos(8'500'000), Nanos(28'000'000), Nanos(8'000'000), 0, 10, 0, true, false};
  l.app_rx = {1, Nanos(28'000'000), Nanos(50'000'000)};
  return l;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vlab_metrics_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Metrics, LayeredIdentitiesOnReferenceFrame) {
  const auto logs = reference_logs();
  const auto r = assemble_record(logs.view());
  EXPECT_EQ(r.app_tx, Nanos(7'300'000));
  EXPECT_EQ(r.network_l, Nanos(1'200'000));
  EXPECT_EQ(r.frame_rx, Nanos(19'500'000));
  EXPECT_EQ(r.app_rx, Nanos(22'000'000));
  EXPECT_EQ(r.frame_l, Nanos(20'700'000));
  EXPECT_EQ(r.service_l, Nanos(50'000'000));
  EXPECT_EQ(r.hops[0].network_l, Nanos(500'000));
  EXPECT_EQ(r.hops[1].network_l, Nanos(500'000));
  EXPECT_EQ(r.server_distribution, Nanos(400'000));
  EXPECT_TRUE(r.identities_hold());
}

TEST(Metrics, ProtocolLatencyIsNetworkPlusReassembly) {
  auto logs = reference_logs();
  logs.final_rx.first_packet_recv_ts = Nanos(8'342'000);
  logs.final_rx.last_packet_recv_ts = logs.final_rx.first_packet_recv_ts + Nanos(15'200'000);
  const auto r = assemble_record(logs.view());
  EXPECT_EQ(r.hops[1].network_l, Nanos(342'000));
  EXPECT_EQ(r.hops[1].protocol_l, Nanos(15'542'000));
}

TEST(Metrics, AllZeroRecordSatisfiesIdentities) {
  FrameLatencyRecord r;
  EXPECT_TRUE(r.identities_hold());
  r.service_l = Nanos(1);
  EXPECT_FALSE(r.identities_hold());
}

TEST(Metrics, OffsetsCorrectOneWayDelays) {
  auto logs = reference_logs();
  // Relay clock 3 ms behind master: its receive and send stamps read 3 ms low.
  const Nanos off(3'000'000);
  logs.relay_rx.first_packet_recv_ts -= off;
  logs.relay_rx.last_packet_recv_ts -= off;
  logs.upstream_complete -= off;
  logs.relay_tx.first_packet_send_ts -= off;
  logs.relay_tx.last_packet_send_ts -= off;
  logs.final_rx.embedded_send_ts_of_first_packet -= off;
  const auto raw = assemble_record(logs.view());
  EXPECT_EQ(raw.hops[1].network_l, Nanos(3'500'000));
  const auto fixed = assemble_record(logs.view({Nanos(0), off, Nanos(0)}));
  EXPECT_EQ(fixed.hops[0].network_l, Nanos(500'000));
  EXPECT_EQ(fixed.hops[1].network_l, Nanos(500'000));
  EXPECT_EQ(fixed.network_l, Nanos(1'200'000));
}

TEST(Metrics, MissingSourceIsNamed) {
  const auto logs = reference_logs();
  auto view = logs.view();
  view.relay_send = nullptr;
  try {
    assemble_record(view);
    FAIL() << "expected IncompleteRecordError";
  } catch (const IncompleteRecordError& e) {
    EXPECT_EQ(e.source(), "relay send log");
  }
  view = logs.view();
  view.app_rx = nullptr;
  EXPECT_THROW(assemble_record(view), IncompleteRecordError);
}

TEST(Metrics, ConstantSeriesHasZeroJitter) {
  EXPECT_EQ(jitter(std::vector<Nanos>(50, Nanos(7))), 0.0);
  std::vector<Nanos> alt;
  for (int i = 0; i < 20; ++i) alt.push_back(Nanos(i % 2 == 0 ? 10 : 20));
  EXPECT_DOUBLE_EQ(jitter(alt), 10.0);
  EXPECT_EQ(jitter({}), 0.0);
}

TEST(Metrics, NearestRankPercentile) {
  std::vector<Nanos> v;
  for (int i = 1; i <= 100; ++i) v.push_back(Nanos(i));
  EXPECT_EQ(percentile(v, 50), Nanos(50));
  EXPECT_EQ(percentile(v, 95), Nanos(95));
  EXPECT_EQ(percentile(v, 100), Nanos(100));
  EXPECT_EQ(percentile({Nanos(4)}, 99), Nanos(4));
}

TEST(Metrics, SummaryCountsOnlyCompletedFrames) {
  std::vector<FrameLatencyRecord> rs;
  const auto logs = reference_logs();
  for (std::uint32_t i = 1; i <= 4; ++i) {
    auto r = assemble_record(logs.view());
    r.frame_id = i;
    rs.push_back(r);
  }
  rs.push_back(dropped_record(5, 3));
  const auto s = summarize(rs);
  EXPECT_EQ(s.frames_sent, 5u);
  EXPECT_EQ(s.frames_completed, 4u);
  EXPECT_EQ(s.frames_dropped, 1u);
  EXPECT_EQ(s.metric("service_l").count, 4u);
  EXPECT_DOUBLE_EQ(s.metric("service_l").mean_ns, 50e6);
  EXPECT_THROW(s.metric("nope"), Error);
}

TEST(Metrics, ReportHasOneRowPerFrame) {
  const auto logs = reference_logs();
  std::vector<FrameLatencyRecord> rs;
  for (std::uint32_t i = 1; i <= 300; ++i) {
    auto r = assemble_record(logs.view());
    r.frame_id = i;
    rs.push_back(r);
  }
  const auto dir = temp_dir("report");
  const auto files = write_report(rs, summarize(rs), dir);
  EXPECT_EQ(line_count(files.frames), 301u);
  EXPECT_TRUE(audit_frames_csv(files.frames).empty());
  std::ifstream in(files.frames);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("frame_id,app_tx_ms,", 0), 0u);
  fs::remove_all(dir);
}

TEST(Metrics, EmptyRunWritesNothing) {
  const auto dir = temp_dir("empty");
  EXPECT_THROW(write_report({}, RunSummary{}, dir), EmptyRunError);
  EXPECT_FALSE(fs::exists(dir / "frames.csv"));
  EXPECT_THROW(summarize({}), EmptyRunError);
}

TEST(Metrics, AuditFlagsBrokenRow) {
  const auto logs = reference_logs();
  std::vector<FrameLatencyRecord> rs{assemble_record(logs.view())};
  const auto dir = temp_dir("audit");
  const auto files = write_report(rs, summarize(rs), dir);
  std::ifstream in(files.frames);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  in.close();
  const auto pos = row.find("50.000000");
  ASSERT_NE(pos, std::string::npos);
  row.replace(pos, 9, "50.000001");
  std::ofstream(files.frames) << header << '\n' << row << '\n';
  EXPECT_EQ(audit_frames_csv(files.frames).size(), 1u);
  fs::remove_all(dir);
}

TEST(Metrics, MillisecondTextIsExact) {
  EXPECT_EQ(parse_ms("12.345678"), Nanos(12'345'678));
  EXPECT_EQ(parse_ms("0.000001"), Nanos(1));
  EXPECT_EQ(parse_ms("7"), Nanos(7'000'000));
  EXPECT_THROW(parse_ms("1.2345678"), Error);
  EXPECT_THROW(parse_ms("x"), Error);
  EXPECT_EQ(format_ms(Nanos(20'700'000)), "20.700000");
}
