#include "vlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace vlab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc() && p == t.data() + t.size() && !t.empty()) return v;
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !(d >= 0) || d > 1.8e19 || d != std::floor(d)) {
    throw ConfigError("expected a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(d);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(d)) {
    throw ConfigError("expected a number, got '" + text + "'");
  }
  return d;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("expected true/false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int precision = 1; precision <= 17; ++precision) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

template <typename Member>
ConfigKey u64_key(std::string name, Member member) {
  return {std::move(name),
          [member](ScenarioConfig& c, const std::string& v) {
            auto& field = member(c);
            using T = std::remove_reference_t<decltype(field)>;
            const auto parsed = parse_u64(v);
            if (parsed > std::numeric_limits<T>::max()) throw ConfigError("value too large: " + v);
            field = static_cast<T>(parsed);
          },
          [member](const ScenarioConfig& c) {
            return std::to_string(member(const_cast<ScenarioConfig&>(c)));
          }};
}

template <typename Member>
ConfigKey double_key(std::string name, Member member) {
  return {std::move(name), [member](ScenarioConfig& c, const std::string& v) { member(c) = parse_double(v); },
          [member](const ScenarioConfig& c) { return format_double(member(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Member>
ConfigKey duration_key(std::string name, Member member) {
  return {std::move(name),
          [member](ScenarioConfig& c, const std::string& v) { member(c) = parse_duration(trim(v)); },
          [member](const ScenarioConfig& c) { return format_duration(member(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Member>
ConfigKey dist_key(std::string name, Member member) {
  return {std::move(name),
          [member](ScenarioConfig& c, const std::string& v) { member(c) = DurationDist::parse(trim(v)); },
          [member](const ScenarioConfig& c) { return member(const_cast<ScenarioConfig&>(c)).to_string(); }};
}

template <typename Member>
ConfigKey bool_key(std::string name, Member member) {
  return {std::move(name), [member](ScenarioConfig& c, const std::string& v) { member(c) = parse_bool(v); },
          [member](const ScenarioConfig& c) {
            return std::string(member(const_cast<ScenarioConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Member>
ConfigKey string_key(std::string name, Member member) {
  return {std::move(name), [member](ScenarioConfig& c, const std::string& v) { member(c) = trim(v); },
          [member](const ScenarioConfig& c) { return member(const_cast<ScenarioConfig&>(c)); }};
}

template <typename Member>
ConfigKey u64_list_key(std::string name, Member member) {
  return {std::move(name),
          [member](ScenarioConfig& c, const std::string& v) {
            auto& field = member(c);
            field.clear();
            for (const auto& item : split_list(v)) field.push_back(parse_u64(item));
          },
          [member](const ScenarioConfig& c) { return join(member(const_cast<ScenarioConfig&>(c))); }};
}

void add_hop_keys(std::vector<ConfigKey>& keys, const std::string& prefix, HopConfig ScenarioConfig::*hop) {
  auto h = [hop](ScenarioConfig& c) -> HopConfig& { return c.*hop; };
  keys.push_back(u64_key(prefix + ".pacing_bps", [h](ScenarioConfig& c) -> auto& { return h(c).pacing_bps; }));
  keys.push_back(
      u64_key(prefix + ".overhead_bytes", [h](ScenarioConfig& c) -> auto& { return h(c).overhead_bytes; }));
  keys.push_back(
      u64_key(prefix + ".bandwidth_bps", [h](ScenarioConfig& c) -> auto& { return h(c).link.bandwidth_bps; }));
  keys.push_back(
      double_key(prefix + ".distance_km", [h](ScenarioConfig& c) -> auto& { return h(c).link.distance_km; }));
  keys.push_back(duration_key(prefix + ".propagation_per_km",
                              [h](ScenarioConfig& c) -> auto& { return h(c).link.propagation_per_km; }));
  keys.push_back(u64_key(prefix + ".hops", [h](ScenarioConfig& c) -> auto& { return h(c).link.hops; }));
  keys.push_back(
      duration_key(prefix + ".switching_min", [h](ScenarioConfig& c) -> auto& { return h(c).link.switching_min; }));
  keys.push_back(
      duration_key(prefix + ".switching_max", [h](ScenarioConfig& c) -> auto& { return h(c).link.switching_max; }));
  keys.push_back(double_key(prefix + ".loss_rate", [h](ScenarioConfig& c) -> auto& { return h(c).link.loss_rate; }));
  keys.push_back(
      double_key(prefix + ".reorder_rate", [h](ScenarioConfig& c) -> auto& { return h(c).link.reorder_rate; }));
  keys.push_back(
      duration_key(prefix + ".reorder_delay", [h](ScenarioConfig& c) -> auto& { return h(c).link.reorder_delay; }));
}

void add_node_keys(std::vector<ConfigKey>& keys, const std::string& prefix, NodeStageModel ScenarioConfig::*node) {
  auto n = [node](ScenarioConfig& c) -> NodeStageModel& { return c.*node; };
  keys.push_back(duration_key(prefix + ".tx_sw", [n](ScenarioConfig& c) -> auto& { return n(c).tx_sw; }));
  keys.push_back(duration_key(prefix + ".tx_hw", [n](ScenarioConfig& c) -> auto& { return n(c).tx_hw; }));
  keys.push_back(duration_key(prefix + ".rx_sw", [n](ScenarioConfig& c) -> auto& { return n(c).rx_sw; }));
  keys.push_back(duration_key(prefix + ".rx_hw", [n](ScenarioConfig& c) -> auto& { return n(c).rx_hw; }));
  keys.push_back(double_key(prefix + ".load_factor", [n](ScenarioConfig& c) -> auto& { return n(c).load_factor; }));
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  using C = ScenarioConfig;
  k.push_back(string_key("name", [](C& c) -> auto& { return c.name; }));
  k.push_back({"mode",
               [](C& c, const std::string& v) {
                 const auto t = trim(v);
                 if (t == "sim") c.mode = RunMode::sim;
                 else if (t == "socket") c.mode = RunMode::socket;
                 else throw ConfigError("expected sim or socket, got '" + v + "'");
               },
               [](const C& c) { return to_string(c.mode); }});
  k.push_back({"experiment",
               [](C& c, const std::string& v) {
                 const auto t = trim(v);
                 if (t == "pipeline") c.experiment = Experiment::pipeline;
                 else if (t == "probe") c.experiment = Experiment::probe;
                 else if (t == "sweep") c.experiment = Experiment::sweep;
                 else throw ConfigError("expected pipeline, probe or sweep, got '" + v + "'");
               },
               [](const C& c) { return to_string(c.experiment); }});
  k.push_back(u64_key("seed", [](C& c) -> auto& { return c.seed; }));
  k.push_back(double_key("duration_s", [](C& c) -> auto& { return c.duration_s; }));
  k.push_back(string_key("out_dir", [](C& c) -> auto& { return c.out_dir; }));
  k.push_back(bool_key("trace", [](C& c) -> auto& { return c.trace; }));

  k.push_back(double_key("capture.fps", [](C& c) -> auto& { return c.capture.fps; }));
  k.push_back(dist_key("capture.app_tx", [](C& c) -> auto& { return c.capture.app_tx; }));
  k.push_back(u64_key("capture.color_bytes", [](C& c) -> auto& { return c.capture.sections.color_bytes; }));
  k.push_back(u64_key("capture.depth_bytes", [](C& c) -> auto& { return c.capture.sections.depth_bytes; }));
  k.push_back(u64_key("capture.audio_bytes", [](C& c) -> auto& { return c.capture.sections.audio_bytes; }));
  k.push_back(bool_key("capture.busy_work", [](C& c) -> auto& { return c.capture.busy_work; }));
  k.push_back(dist_key("render.app_rx", [](C& c) -> auto& { return c.render.app_rx; }));
  k.push_back(bool_key("render.busy_work", [](C& c) -> auto& { return c.render.busy_work; }));

  k.push_back(u64_key("transport.segment_payload_size", [](C& c) -> auto& { return c.transport.segment_payload_size; }));
  k.push_back(u64_key("transport.packet_payload_size", [](C& c) -> auto& { return c.transport.packet_payload_size; }));
  k.push_back(duration_key("transport.nack_delay", [](C& c) -> auto& { return c.transport.nack_delay; }));
  k.push_back(duration_key("transport.tail_timeout", [](C& c) -> auto& { return c.transport.tail_timeout; }));
  k.push_back(duration_key("transport.nack_retry", [](C& c) -> auto& { return c.transport.nack_retry; }));
  k.push_back(u64_key("transport.max_nack_rounds", [](C& c) -> auto& { return c.transport.max_nack_rounds; }));
  k.push_back(duration_key("transport.frame_deadline", [](C& c) -> auto& { return c.transport.frame_deadline; }));
  k.push_back(u64_key("transport.retention_frames", [](C& c) -> auto& { return c.transport.retention_frames; }));
  k.push_back(duration_key("transport.ack_timeout", [](C& c) -> auto& { return c.transport.ack_timeout; }));
  k.push_back(u64_key("transport.max_tail_probes", [](C& c) -> auto& { return c.transport.max_tail_probes; }));
  k.push_back(u64_key("transport.max_frame_bytes", [](C& c) -> auto& { return c.transport.max_frame_bytes; }));

  add_hop_keys(k, "hop1", &C::hop1);
  add_hop_keys(k, "hop2", &C::hop2);
  add_node_keys(k, "sender", &C::sender);
  add_node_keys(k, "relay", &C::relay);
  add_node_keys(k, "receiver", &C::receiver);

  k.push_back({"relay.policy",
               [](C& c, const std::string& v) { c.relay_node.policy = parse_forward_policy(trim(v)); },
               [](const C& c) { return to_string(c.relay_node.policy); }});
  k.push_back(duration_key("relay.segment_processing", [](C& c) -> auto& { return c.relay_node.segment_processing; }));
  k.push_back(double_key("relay.stall_probability", [](C& c) -> auto& { return c.relay_node.stall.probability; }));
  k.push_back(dist_key("relay.stall_duration", [](C& c) -> auto& { return c.relay_node.stall.duration; }));
  k.push_back(u64_key("relay.queue_high_water", [](C& c) -> auto& { return c.relay_node.queue_high_water; }));
  k.push_back(u64_list_key("relay.receiver_pacing_bps", [](C& c) -> auto& { return c.relay_node.receiver_pacing_bps; }));
  k.push_back(u64_key("receivers", [](C& c) -> auto& { return c.receivers; }));

  k.push_back(duration_key("clock.sender_offset", [](C& c) -> auto& { return c.clock.sender_offset; }));
  k.push_back(duration_key("clock.relay_offset", [](C& c) -> auto& { return c.clock.relay_offset; }));
  k.push_back(duration_key("clock.receiver_offset", [](C& c) -> auto& { return c.clock.receiver_offset; }));
  k.push_back(double_key("clock.sender_drift_ppm", [](C& c) -> auto& { return c.clock.sender_drift_ppm; }));
  k.push_back(double_key("clock.relay_drift_ppm", [](C& c) -> auto& { return c.clock.relay_drift_ppm; }));
  k.push_back(double_key("clock.receiver_drift_ppm", [](C& c) -> auto& { return c.clock.receiver_drift_ppm; }));
  k.push_back(duration_key("clock.sync_interval", [](C& c) -> auto& { return c.clock.sync_interval; }));
  k.push_back(duration_key("clock.sync_slave_to_master", [](C& c) -> auto& { return c.clock.path.slave_to_master; }));
  k.push_back(duration_key("clock.sync_master_to_slave", [](C& c) -> auto& { return c.clock.path.master_to_slave; }));
  k.push_back(duration_key("clock.sync_turnaround", [](C& c) -> auto& { return c.clock.path.master_turnaround; }));
  k.push_back(double_key("clock.sync_loss_rate", [](C& c) -> auto& { return c.clock.path.loss_rate; }));
  k.push_back(u64_key("clock.sync_retries", [](C& c) -> auto& { return c.clock.path.max_retries; }));
  k.push_back(bool_key("clock.correct", [](C& c) -> auto& { return c.clock.correct; }));

  k.push_back({"probe.sizes",
               [](C& c, const std::string& v) {
                 c.probe.sizes.clear();
                 for (const auto& item : split_list(v)) c.probe.sizes.push_back(parse_u64(item));
               },
               [](const C& c) { return join(c.probe.sizes); }});
  k.push_back(u64_key("probe.samples", [](C& c) -> auto& { return c.probe.samples; }));
  k.push_back(u64_list_key("sweep.bandwidths_bps", [](C& c) -> auto& { return c.sweep.bandwidths_bps; }));
  k.push_back(double_key("sweep.duration_s", [](C& c) -> auto& { return c.sweep.duration_s; }));

  k.push_back(string_key("socket.sender_addr", [](C& c) -> auto& { return c.socket.sender_addr; }));
  k.push_back(string_key("socket.relay_addr", [](C& c) -> auto& { return c.socket.relay_addr; }));
  k.push_back(string_key("socket.receiver_addr", [](C& c) -> auto& { return c.socket.receiver_addr; }));
  k.push_back(double_key("socket.idle_timeout_s", [](C& c) -> auto& { return c.socket.idle_timeout_s; }));
  k.push_back(u64_key("socket.buffer_bytes", [](C& c) -> auto& { return c.socket.socket_buffer_bytes; }));
  return k;
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& key : config_keys()) {
    if (key.name == name) return &key;
  }
  return nullptr;
}

bool valid_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) return false;
  try {
    const auto port = parse_u64(addr.substr(colon + 1));
    return port >= 1 && port <= 65535;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace

Nanos ScenarioConfig::duration() const { return Nanos(std::llround(duration_s * 1e9)); }

std::uint64_t ScenarioConfig::frame_count() const { return capture.frames_in(duration()); }

std::uint64_t ScenarioConfig::downstream_pacing(std::size_t receiver) const {
  if (receiver < relay_node.receiver_pacing_bps.size()) return relay_node.receiver_pacing_bps[receiver];
  return hop2.pacing_bps;
}

std::string to_string(RunMode mode) { return mode == RunMode::sim ? "sim" : "socket"; }

std::string to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::pipeline: return "pipeline";
    case Experiment::probe: return "probe";
    case Experiment::sweep: return "sweep";
  }
  return "pipeline";
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(ScenarioConfig& config, const std::string& key, const std::string& value) {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw ConfigError("unknown key '" + key + "'");
  try {
    k->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + "=" + value + ": " + e.what());
  }
}

std::string get_config_value(const ScenarioConfig& config, const std::string& key) {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw ConfigError("unknown key '" + key + "'");
  return k->get(config);
}

ScenarioConfig parse_config(const std::string& text, ScenarioConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key=value, got '" + line + "'");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_config(const ScenarioConfig& config) {
  std::string out;
  for (const auto& key : config_keys()) out += key.name + "=" + key.get(config) + "\n";
  return out;
}

std::string env_var_name(const std::string& key) {
  std::string out = "VLAB_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> apply_env_overrides(ScenarioConfig& config,
                                             const std::function<const char*(const char*)>& lookup) {
  std::vector<std::string> applied;
  for (const auto& key : config_keys()) {
    const std::string var = env_var_name(key.name);
    const char* value = lookup ? lookup(var.c_str()) : std::getenv(var.c_str());
    if (value == nullptr) continue;
    try {
      key.set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(var + " (" + key.name + "=" + value + "): " + e.what());
    }
    applied.push_back(key.name);
  }
  return applied;
}

std::vector<Diagnostic> validate(const ScenarioConfig& c) {
  std::vector<Diagnostic> out;
  auto bad = [&](const std::string& key, const std::string& constraint) {
    out.push_back({key, get_config_value(c, key), constraint});
  };

  if (!(c.duration_s > 0) || !std::isfinite(c.duration_s)) bad("duration_s", "duration_s must be > 0");
  if (!(c.capture.fps > 0) || !std::isfinite(c.capture.fps)) bad("capture.fps", "fps must be > 0");
  if (c.capture.app_tx.lo < Nanos(0) || c.capture.app_tx.hi < c.capture.app_tx.lo) {
    bad("capture.app_tx", "durations must be >= 0 with lo <= hi");
  }
  if (c.render.app_rx.lo < Nanos(0) || c.render.app_rx.hi < c.render.app_rx.lo) {
    bad("render.app_rx", "durations must be >= 0 with lo <= hi");
  }
  if (c.capture.sections.total() == 0) bad("capture.color_bytes", "at least one frame section must be > 0");
  if (c.capture.sections.total() > c.transport.max_frame_bytes) {
    bad("transport.max_frame_bytes", "must be >= the frame size " + std::to_string(c.capture.sections.total()));
  }
  if (c.duration_s > 0 && c.capture.fps > 0 && c.frame_count() == 0) {
    bad("duration_s", "duration must cover at least one frame interval");
  }

  const auto& t = c.transport;
  if (t.segment_payload_size == 0) bad("transport.segment_payload_size", "segment_payload_size must be >= 1");
  if (t.packet_payload_size == 0 || t.packet_payload_size > 0xFFFF) {
    bad("transport.packet_payload_size", "packet_payload_size must be in [1,65535]");
  }
  if (t.segment_payload_size > 0 && t.packet_payload_size > 0 &&
      chunk_count(t.segment_payload_size, t.packet_payload_size) > 0xFFFF) {
    bad("transport.packet_payload_size", "a segment must fit in 65535 packets");
  }
  if (t.segment_payload_size > 0 && chunk_count(c.capture.sections.total(), t.segment_payload_size) > 0xFFFF) {
    bad("transport.segment_payload_size", "a frame must fit in 65535 segments");
  }
  if (t.nack_delay < Nanos(0)) bad("transport.nack_delay", "nack_delay must be >= 0");
  if (t.tail_timeout <= Nanos(0)) bad("transport.tail_timeout", "tail_timeout must be > 0");
  if (t.nack_retry <= Nanos(0)) bad("transport.nack_retry", "nack_retry must be > 0");
  if (t.frame_deadline < Nanos(0)) bad("transport.frame_deadline", "frame_deadline must be >= 0 (0: unlimited)");
  if (t.retention_frames == 0) bad("transport.retention_frames", "retention_frames must be >= 1");
  if (t.ack_timeout <= Nanos(0)) bad("transport.ack_timeout", "ack_timeout must be > 0");

  const std::pair<const char*, const HopConfig*> hops[] = {{"hop1", &c.hop1}, {"hop2", &c.hop2}};
  for (const auto& [name, hop] : hops) {
    const std::string p = name;
    if (hop->pacing_bps == 0) bad(p + ".pacing_bps", p + " pacing rate must be > 0");
    if (hop->link.bandwidth_bps == 0) bad(p + ".bandwidth_bps", p + " bandwidth must be > 0");
    if (!(hop->link.distance_km >= 0) || !std::isfinite(hop->link.distance_km)) {
      bad(p + ".distance_km", "distance_km must be >= 0");
    }
    if (hop->link.propagation_per_km < Nanos(0)) bad(p + ".propagation_per_km", "propagation_per_km must be >= 0");
    if (hop->link.switching_min < Nanos(0)) bad(p + ".switching_min", "switching_min must be >= 0");
    if (hop->link.switching_max < hop->link.switching_min) {
      bad(p + ".switching_max", "switching_max must be >= switching_min");
    }
    if (!(hop->link.loss_rate >= 0 && hop->link.loss_rate <= 1)) bad(p + ".loss_rate", "loss_rate must be in [0,1]");
    if (!(hop->link.reorder_rate >= 0 && hop->link.reorder_rate <= 1)) {
      bad(p + ".reorder_rate", "reorder_rate must be in [0,1]");
    }
    if (hop->link.reorder_delay < Nanos(0)) bad(p + ".reorder_delay", "reorder_delay must be >= 0");
  }
  for (std::size_t i = 0; i < c.relay_node.receiver_pacing_bps.size(); ++i) {
    if (c.relay_node.receiver_pacing_bps[i] == 0) {
      bad("relay.receiver_pacing_bps", "pacing rate of receiver " + std::to_string(i) + " must be > 0");
    }
  }

  const std::pair<const char*, const NodeStageModel*> nodes[] = {
      {"sender", &c.sender}, {"relay", &c.relay}, {"receiver", &c.receiver}};
  for (const auto& [name, node] : nodes) {
    const std::string p = name;
    if (node->tx_sw < Nanos(0)) bad(p + ".tx_sw", "tx_sw must be >= 0");
    if (node->tx_hw < Nanos(0)) bad(p + ".tx_hw", "tx_hw must be >= 0");
    if (node->rx_sw < Nanos(0)) bad(p + ".rx_sw", "rx_sw must be >= 0");
    if (node->rx_hw < Nanos(0)) bad(p + ".rx_hw", "rx_hw must be >= 0");
    if (!(node->load_factor >= 0) || !std::isfinite(node->load_factor)) {
      bad(p + ".load_factor", "load_factor must be >= 0");
    }
  }

  if (c.relay_node.segment_processing < Nanos(0)) bad("relay.segment_processing", "segment_processing must be >= 0");
  if (!(c.relay_node.stall.probability >= 0 && c.relay_node.stall.probability <= 1)) {
    bad("relay.stall_probability", "stall probability must be in [0,1]");
  }
  if (c.relay_node.stall.duration.lo < Nanos(0) || c.relay_node.stall.duration.hi < c.relay_node.stall.duration.lo) {
    bad("relay.stall_duration", "stall durations must be >= 0 with lo <= hi");
  }
  if (c.receivers < 1 || c.receivers > 64) bad("receivers", "receivers must be in [1,64]");

  if (c.clock.sync_interval <= Nanos(0)) bad("clock.sync_interval", "sync_interval must be > 0");
  if (c.clock.path.slave_to_master < Nanos(0)) bad("clock.sync_slave_to_master", "sync path delay must be >= 0");
  if (c.clock.path.master_to_slave < Nanos(0)) bad("clock.sync_master_to_slave", "sync path delay must be >= 0");
  if (c.clock.path.master_turnaround < Nanos(0)) bad("clock.sync_turnaround", "turnaround must be >= 0");
  if (!(c.clock.path.loss_rate >= 0 && c.clock.path.loss_rate < 1)) {
    bad("clock.sync_loss_rate", "sync loss rate must be in [0,1)");
  }
  const std::pair<const char*, double> drifts[] = {{"clock.sender_drift_ppm", c.clock.sender_drift_ppm},
                                                   {"clock.relay_drift_ppm", c.clock.relay_drift_ppm},
                                                   {"clock.receiver_drift_ppm", c.clock.receiver_drift_ppm}};
  for (const auto& [key, ppm] : drifts) {
    if (!std::isfinite(ppm) || std::abs(ppm) > 1000) bad(key, "drift must be within +-1000 ppm");
  }

  if (c.experiment == Experiment::probe) {
    if (c.probe.sizes.empty()) bad("probe.sizes", "at least one probe size is required");
    for (auto s : c.probe.sizes) {
      if (s == 0) bad("probe.sizes", "probe sizes must be >= 1");
    }
    if (c.probe.samples == 0) bad("probe.samples", "samples must be >= 1");
  }
  if (c.experiment == Experiment::sweep) {
    if (c.sweep.bandwidths_bps.empty()) bad("sweep.bandwidths_bps", "at least one bandwidth is required");
    for (auto b : c.sweep.bandwidths_bps) {
      if (b == 0) bad("sweep.bandwidths_bps", "bandwidths must be > 0");
    }
    if (!(c.sweep.duration_s > 0)) bad("sweep.duration_s", "sweep duration must be > 0");
  }

  if (!valid_addr(c.socket.sender_addr)) bad("socket.sender_addr", "expected host:port");
  if (!valid_addr(c.socket.relay_addr)) bad("socket.relay_addr", "expected host:port");
  if (!valid_addr(c.socket.receiver_addr)) bad("socket.receiver_addr", "expected host:port");
  if (!(c.socket.idle_timeout_s > 0)) bad("socket.idle_timeout_s", "idle timeout must be > 0");
  return out;
}

}  // namespace vlab
