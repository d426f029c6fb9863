#include <algorithm>

#include "vlab/config.hpp"

namespace vlab {
namespace {

NodeStageModel desk_node() {
  NodeStageModel n;
  n.tx_sw = Nanos(2'000);
  n.tx_hw = Nanos(1'000);
  n.rx_hw = Nanos(2'000);
  n.rx_sw = Nanos(3'000);
  return n;
}

// Sender and server share a rack; server to receiver crosses the 1 km fiber.
ScenarioConfig testbed(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.out_dir = "out/" + name;
  c.duration_s = 10.0;
  c.seed = 1;

  c.hop1.pacing_bps = 2'000'000'000;
  c.hop1.overhead_bytes = 74;  // header 32 + UDP 8 + IPv4 20 + Ethernet 14
  c.hop1.link.bandwidth_bps = 10'000'000'000;
  c.hop1.link.distance_km = 0.01;
  c.hop1.link.hops = 1;

  c.hop2.pacing_bps = 1'500'000'000;
  c.hop2.overhead_bytes = 74;
  c.hop2.link.bandwidth_bps = 10'000'000'000;
  c.hop2.link.distance_km = 1.0;
  c.hop2.link.hops = 2;

  c.sender = desk_node();
  c.relay = desk_node();
  c.receiver = desk_node();
  return c;
}

ScenarioConfig paper_default() {
  ScenarioConfig c = testbed("paper-default");
  c.relay_node.segment_processing = Nanos(880'000);
  return c;
}

ScenarioConfig paper_protocol() { return testbed("paper-protocol"); }

ScenarioConfig paper_probe() {
  ScenarioConfig c = testbed("paper-probe");
  c.experiment = Experiment::probe;
  c.probe.sizes = {128, 512, 1024};
  c.probe.samples = 300;
  return c;
}

ScenarioConfig bandwidth_sweep() {
  ScenarioConfig c;
  c.name = "bandwidth-sweep";
  c.out_dir = "out/bandwidth-sweep";
  c.experiment = Experiment::sweep;
  c.sweep.bandwidths_bps = {1'000'000'000, 2'000'000'000, 5'000'000'000, 10'000'000'000};
  c.sweep.duration_s = 1.0;
  for (HopConfig* hop : {&c.hop1, &c.hop2}) {
    hop->overhead_bytes = 0;
    hop->link.distance_km = 0;
    hop->link.hops = 0;
  }
  return c;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"paper-default", "paper-protocol", "paper-probe",
                                                 "bandwidth-sweep"};
  return names;
}

ScenarioConfig scenario(const std::string& name) {
  if (name == "paper-default") return paper_default();
  if (name == "paper-protocol") return paper_protocol();
  if (name == "paper-probe") return paper_probe();
  if (name == "bandwidth-sweep") return bandwidth_sweep();
  std::string known;
  for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
}

}  // namespace vlab
