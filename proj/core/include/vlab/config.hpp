#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vlab/app_emu.hpp"
#include "vlab/clocksync.hpp"
#include "vlab/netem.hpp"
#include "vlab/relay.hpp"
#include "vlab/transport.hpp"

namespace vlab {

enum class RunMode { sim, socket };
enum class Experiment { pipeline, probe, sweep };

struct HopConfig {
  std::uint64_t pacing_bps = 2'000'000'000;
  std::uint32_t overhead_bytes = 0;
  LinkModel link;
};

struct TransportSettings {
  std::size_t segment_payload_size = kDefaultSegmentPayload;
  std::size_t packet_payload_size = kDefaultPacketPayload;
  Nanos nack_delay{2'000'000};
  Nanos tail_timeout{5'000'000};
  Nanos nack_retry{5'000'000};
  std::uint32_t max_nack_rounds = 3;
  Nanos frame_deadline{66'666'666};
  std::size_t retention_frames = 8;
  Nanos ack_timeout{10'000'000};
  std::uint32_t max_tail_probes = 3;
  std::uint64_t max_frame_bytes = 256'000'000;
};

struct ClockSettings {
  Nanos sender_offset{0};
  Nanos relay_offset{0};
  Nanos receiver_offset{0};  // receivers other than the first (the master)
  double sender_drift_ppm = 0.0;
  double relay_drift_ppm = 0.0;
  double receiver_drift_ppm = 0.0;
  Nanos sync_interval{1'000'000'000};
  SyncPath path;
  bool correct = true;
};

struct RelaySettings {
  ForwardPolicy policy = ForwardPolicy::cut_through;
  Nanos segment_processing{0};
  StallModel stall;
  std::size_t queue_high_water = 1'000'000;
  std::vector<std::uint64_t> receiver_pacing_bps;  // empty: hop2.pacing_bps for all
};

struct ProbeSettings {
  std::vector<std::size_t> sizes{128, 512, 1024};
  std::size_t samples = 300;
};

struct SweepSettings {
  std::vector<std::uint64_t> bandwidths_bps{1'000'000'000, 2'000'000'000, 5'000'000'000, 10'000'000'000};
  double duration_s = 1.0;
};

struct SocketSettings {
  std::string sender_addr = "127.0.0.1:47100";
  std::string relay_addr = "127.0.0.1:47101";
  std::string receiver_addr = "127.0.0.1:47110";  // receiver k listens on port + k
  double idle_timeout_s = 3.0;
  std::size_t socket_buffer_bytes = 8 * 1024 * 1024;
};

struct ScenarioConfig {
  std::string name = "custom";
  RunMode mode = RunMode::sim;
  Experiment experiment = Experiment::pipeline;
  std::uint64_t seed = 1;
  double duration_s = 10.0;
  std::string out_dir = "out";
  bool trace = false;

  CaptureProfile capture;
  RenderProfile render;
  TransportSettings transport;
  HopConfig hop1;
  HopConfig hop2;
  NodeStageModel sender;
  NodeStageModel relay;
  NodeStageModel receiver;
  RelaySettings relay_node;
  std::uint32_t receivers = 1;
  ClockSettings clock;
  ProbeSettings probe;
  SweepSettings sweep;
  SocketSettings socket;

  Nanos duration() const;
  std::uint64_t frame_count() const;
  std::uint64_t downstream_pacing(std::size_t receiver) const;
};

struct Diagnostic {
  std::string key;
  std::string value;
  std::string constraint;

  std::string message() const { return key + "=" + value + ": " + constraint; }
};

/// Every key the text format understands, with a reader and a writer.
struct ConfigKey {
  std::string name;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Sets one key. Throws ConfigError for an unknown key or unparsable value.
void set_config_value(ScenarioConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const ScenarioConfig& config, const std::string& key);

/// key=value lines; '#' starts a comment. Applied on top of `base`.
ScenarioConfig parse_config(const std::string& text, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base = {});

/// Serializes every key, one per line, in registry order.
std::string dump_config(const ScenarioConfig& config);

/// VLAB_<KEY> with '.' replaced by '_' and letters upper-cased.
std::string env_var_name(const std::string& key);

/// Applies environment overrides through `lookup` (std::getenv by default).
/// Returns the keys that were overridden.
std::vector<std::string> apply_env_overrides(
    ScenarioConfig& config, const std::function<const char*(const char*)>& lookup = nullptr);

/// Empty iff the configuration is runnable.
std::vector<Diagnostic> validate(const ScenarioConfig& config);

/// The canned reproductions.
const std::vector<std::string>& scenario_names();
ScenarioConfig scenario(const std::string& name);

std::string to_string(RunMode mode);
std::string to_string(Experiment experiment);

}  // namespace vlab
