// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vlab/config.hpp"
#include "vlab/frame.hpp"
#include "vlab/loopback.hpp"
#include "vlab/metrics.hpp"
#include "vlab/pipeline.hpp"
#include "vlab/probe.hpp"
#include "vlab/rng.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

Outcome bandwidth_identity() {
  const double bps = required_bandwidth_bps(3'520'000, 30.0);
  const double rel = std::abs(bps - 844.8e6) / 844.8e6;
  return {rel <= 1e-3, fmt("required_bandwidth = %.3f Mbps", bps / 1e6)};
}

Outcome serialization_scaling() {
  ScenarioConfig c = scenario("bandwidth-sweep");
  c.duration_s = 0.2;
  bool ok = true;
  std::string detail;
  for (std::uint64_t bw : {kGbps, 10 * kGbps}) {
    c.hop1.pacing_bps = c.hop2.pacing_bps = bw;
    c.hop1.link.bandwidth_bps = c.hop2.link.bandwidth_bps = bw;
    const Nanos expected = bw == kGbps ? Nanos(28'160'000) : Nanos(2'816'000);
    const auto r = run_pipeline(c);
    Nanos lo = Nanos::max(), hi = Nanos::min();
    for (const auto& rec : r.receivers[0].records) {
      ok = ok && rec.completed;
      lo = std::min(lo, rec.hops[0].protocol_tx);
      hi = std::max(hi, rec.hops[0].protocol_tx);
    }
    ok = ok && lo == expected && hi == expected;
    detail += fmt("%.0f Gbps: Protocol(Tx) %.6f..%.6f ms; ", static_cast<double>(bw) / 1e9, to_ms(lo), to_ms(hi));
  }
  return {ok, detail};
}

Outcome decomposition(const fs::path& out) {
  const auto r = run_pipeline(scenario("paper-default"));
  write_pipeline_report(r, out);
  const auto& s = r.receivers[0].summary;
  const double svc = s.metric("service_l").mean_ns / 1e6;
  const double fl = s.metric("frame_l").mean_ns / 1e6;
  const double share = 100.0 * (s.metric("app_tx").mean_ns + s.metric("app_rx").mean_ns) /
                       s.metric("service_l").mean_ns;
  bool identities = true;
  for (const auto& rec : r.receivers[0].records) identities = identities && rec.completed && rec.identities_hold();
  const bool ok = r.frames_sent == 300 && identities && std::abs(svc - 50.0) <= 2.0 && std::abs(fl - 20.7) <= 1.5 &&
                  std::abs(share - 58.0) <= 2.0;
  return {ok, fmt("service_l %.3f ms, frame_l %.3f ms, application share %.2f%%, frames %.0f", svc, fl, share,
                  static_cast<double>(s.frames_completed))};
}

Outcome protocol_consistency() {
  const auto r = run_pipeline(scenario("paper-protocol"));
  const auto& s = r.receivers[0].summary;
  const auto& tx1 = s.metric("protocol_tx1");
  const auto& tx2 = s.metric("protocol_tx2");
  const bool ok = tx1.min >= Nanos(14'080'000) && tx1.max <= Nanos(15'500'000) && tx2.min >= Nanos(18'770'000) &&
                  tx2.max <= Nanos(19'800'000);
  return {ok, fmt("2 Gbps: %.3f ms (mean), 1.5 Gbps: %.3f ms (mean)", tx1.mean_ns / 1e6, tx2.mean_ns / 1e6)};
}

Outcome metric_identities(const fs::path& out) {
  SeedStream pick(2024, "acceptance/identities");
  std::size_t rows = 0;
  std::vector<std::string> problems;
  for (int i = 0; i < 12; ++i) {
    ScenarioConfig c = scenario(i % 2 == 0 ? "paper-default" : "paper-protocol");
    c.seed = pick.next_u64() % 100'000;
    c.duration_s = 1.0;
    c.capture.sections = {static_cast<std::uint64_t>(pick.uniform_int(10'000, 1'400'000)),
                          static_cast<std::uint64_t>(pick.uniform_int(0, 1'920'000)),
                          static_cast<std::uint64_t>(pick.uniform_int(0, 200'000))};
    c.hop1.link.loss_rate = static_cast<double>(pick.uniform_int(0, 30)) / 1000.0;
    c.hop2.link.loss_rate = static_cast<double>(pick.uniform_int(0, 30)) / 1000.0;
    c.hop1.pacing_bps = static_cast<std::uint64_t>(pick.uniform_int(1, 4)) * 500'000'000;
    c.receivers = static_cast<std::uint32_t>(pick.uniform_int(1, 3));
    c.relay_node.policy = pick.bernoulli(0.5) ? ForwardPolicy::cut_through : ForwardPolicy::store_and_forward;
    c.relay_node.stall.probability = static_cast<double>(pick.uniform_int(0, 3)) / 10.0;
    c.relay_node.stall.duration = DurationDist::uniform(Nanos(0), Nanos(4'000'000));
    c.render.app_rx = DurationDist::uniform(Nanos(18'000'000), Nanos(26'000'000));
    c.clock.sender_offset = Nanos(pick.uniform_int(-5'000'000, 5'000'000));
    c.clock.relay_offset = Nanos(pick.uniform_int(-5'000'000, 5'000'000));
    c.clock.receiver_offset = Nanos(pick.uniform_int(-5'000'000, 5'000'000));
    const auto dir = out / ("scenario_" + std::to_string(i));
    for (const auto& files : write_pipeline_report(run_pipeline(c), dir)) {
      for (const auto& p : audit_frames_csv(files.frames)) problems.push_back(files.frames.string() + ": " + p);
      std::ifstream in(files.frames);
      for (std::string line; std::getline(in, line);) ++rows;
    }
  }
  std::string detail = fmt("12 scenarios, %.0f rows audited, %.0f violations", static_cast<double>(rows),
                           static_cast<double>(problems.size()));
  if (!problems.empty()) detail += "; first: " + problems.front();
  return {problems.empty() && rows > 12, detail};
}

Outcome reliability() {
  const ScenarioConfig base = scenario("paper-default");
  std::vector<double> means;
  bool all_intact = true;
  std::string detail;
  for (double loss : {0.001, 0.01, 0.05}) {
    double sum_rx = 0;
    std::size_t intact_min = 300;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ScenarioConfig c = base;
      c.transport.frame_deadline = Nanos(0);
      c.transport.max_nack_rounds = 0;
      c.transport.max_tail_probes = 0;
      LoopbackConfig lc;
      lc.sender = make_sender_config(c, c.hop1.pacing_bps, c.hop1.overhead_bytes);
      lc.receiver = make_receiver_config(c);
      lc.link = c.hop1.link;
      lc.link.loss_rate = loss;
      lc.frames = 300;
      lc.fps = c.capture.fps;
      lc.sections = c.capture.sections;
      lc.seed = seed;
      const auto r = run_loopback(lc);
      std::size_t intact = 0;
      double rx = 0;
      for (const auto& f : r.frames) {
        intact += f.intact ? 1 : 0;
        rx += static_cast<double>(f.frame_rx.count());
      }
      all_intact = all_intact && intact == 300 && r.frames.size() == 300;
      intact_min = std::min(intact_min, intact);
      sum_rx += rx / static_cast<double>(r.frames.size());
    }
    means.push_back(sum_rx / 20.0);
    detail += fmt("loss %.1f%%: min intact %.0f/300, mean frame_rx %.3f ms; ", loss * 100,
                  static_cast<double>(intact_min), means.back() / 1e6);
  }
  const bool monotone = means[0] <= means[1] && means[1] <= means[2];
  return {all_intact && monotone, detail};
}

Outcome probe() {
  auto c = scenario("paper-probe");
  const auto hops = run_probe_scenario(c);
  bool ok = true;
  std::string detail;
  for (const auto& hop : hops) {
    double prev = -1;
    detail += hop.hop + ":";
    for (const auto& s : hop.sizes) {
      const double t = s.stage("total").mean_ns;
      ok = ok && t > prev && t < 50'000.0;
      prev = t;
      detail += fmt(" %.3f", t / 1e3);
    }
    detail += " us; ";
  }
  c.relay.rx_sw = c.relay.rx_sw * 10;
  const auto loaded = run_probe_scenario(c);
  for (std::size_t i = 0; i < loaded[0].sizes.size(); ++i) {
    ok = ok && loaded[0].sizes[i].stage("total").mean_ns > loaded[1].sizes[i].stage("total").mean_ns;
  }
  detail += fmt("relay rx_sw x10: hop1 %.3f us vs hop2 %.3f us at 1024 B",
                loaded[0].sizes.back().stage("total").mean_ns / 1e3,
                loaded[1].sizes.back().stage("total").mean_ns / 1e3);
  return {ok, detail};
}

Outcome clock_correction() {
  ScenarioConfig c = scenario("paper-default");
  const Nanos offset(3'000'000);
  c.clock.sender_offset = offset;
  std::size_t packets = 0, inflated = 0, exact = 0;
  const auto r = run_pipeline(c, [&](const PacketTrace& t) {
    if (t.link != "hop1" || t.type != PacketType::data || t.lost) return;
    ++packets;
    const Nanos truth = t.true_recv - t.true_send;
    const Nanos uncorrected = t.recv_local - t.embedded_send;
    const Nanos corrected = uncorrected - t.correction;
    if (uncorrected - truth == offset) ++inflated;
    if (corrected == truth) ++exact;
  });
  const bool ok = packets > 0 && inflated == packets && exact == packets && r.frames_sent == 300 &&
                  r.final_offsets.sender == offset;
  return {ok, fmt("%.0f hop1 packets: %.0f inflated by exactly 3 ms, %.0f corrected to ground truth",
                  static_cast<double>(packets), static_cast<double>(inflated), static_cast<double>(exact))};
}

Outcome determinism(const fs::path& out) {
  bool ok = true;
  std::size_t compared = 0;
  for (const char* name : {"paper-default", "paper-protocol"}) {
    ScenarioConfig c = scenario(name);
    c.hop1.link.loss_rate = 0.01;
    c.hop2.link.loss_rate = 0.01;
    c.receivers = 2;
    c.relay_node.stall.probability = 0.1;
    c.relay_node.stall.duration = DurationDist::uniform(Nanos(0), Nanos(3'000'000));
    const auto a = write_pipeline_report(run_pipeline(c), out / name / "a");
    const auto b = write_pipeline_report(run_pipeline(c), out / name / "b");
    for (std::size_t k = 0; k < a.size(); ++k) {
      ok = ok && file_hash(a[k].frames) == file_hash(b[k].frames) &&
           file_hash(a[k].summary) == file_hash(b[k].summary);
      compared += 2;
    }
  }
  return {ok && compared == 8, fmt("%.0f CSV pairs hashed, all identical: ", static_cast<double>(compared)) +
                                   (ok ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0) out = argv[i + 1];
  }
  fs::remove_all(out);
  fs::create_directories(out);

  struct Criterion {
    int number;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "bandwidth identity", 0, bandwidth_identity},
      {2, "serialization scaling", 1.0, serialization_scaling},
      {3, "latency decomposition", 10.0, [&] { return decomposition(out / "decomposition"); }},
      {4, "protocol tx consistency", 5.0, protocol_consistency},
      {5, "metric identities", 0, [&] { return metric_identities(out / "identities"); }},
      {6, "reliability under loss", 60.0, reliability},
      {7, "probe stage latencies", 5.0, probe},
      {8, "clock correction", 0, clock_correction},
      {9, "determinism", 0, [&] { return determinism(out / "determinism"); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s == 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.name << "): " << o.detail
              << fmt(" [%.2f s", secs) << (c.budget_s > 0 ? fmt(", budget %.0f s]", c.budget_s) : "]")
              << (in_time ? "" : " runtime budget exceeded") << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
