#include "vlab/app_emu.hpp"

#include <cmath>

namespace vlab {

DurationDist DurationDist::parse(const std::string& text) {
  const std::string prefix = "uniform(";
  if (text.rfind(prefix, 0) == 0) {
    if (text.back() != ')') throw ConfigError("bad distribution '" + text + "': missing ')'");
    const std::string inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    const auto comma = inner.find(',');
    if (comma == std::string::npos) throw ConfigError("bad distribution '" + text + "': expected uniform(lo,hi)");
    const Nanos lo = parse_duration(inner.substr(0, comma));
    const Nanos hi = parse_duration(inner.substr(comma + 1));
    if (hi < lo) throw ConfigError("bad distribution '" + text + "': hi < lo");
    return uniform(lo, hi);
  }
  return fixed(parse_duration(text));
}

std::string DurationDist::to_string() const {
  if (kind == Kind::fixed) return format_duration(lo);
  return "uniform(" + format_duration(lo) + "," + format_duration(hi) + ")";
}

Nanos DurationDist::sample(SeedStream& stream) const {
  if (kind == Kind::fixed) return lo;
  return Nanos(stream.uniform_int(lo.count(), hi.count()));
}

Nanos CaptureProfile::tick_time(std::uint64_t k) const {
  const long double t = static_cast<long double>(k) * 1e9L / static_cast<long double>(fps);
  return Nanos(static_cast<std::int64_t>(std::floor(t + 1e-6L)));
}

std::uint64_t CaptureProfile::frames_in(Nanos duration) const {
  if (duration.count() <= 0) return 0;
  auto n = static_cast<std::uint64_t>(std::ceil(static_cast<long double>(duration.count()) * fps / 1e9L - 1e-9L));
  while (n > 0 && tick_time(n - 1) >= duration) --n;
  while (tick_time(n) < duration) ++n;
  return n;
}

CaptureEmulator::CaptureEmulator(CaptureProfile profile, std::uint64_t seed)
    : profile_(profile), seed_(seed), app_tx_stream_(seed, "app_tx") {
  if (!(profile_.fps > 0.0)) throw ConfigError("capture fps must be > 0");
}

CaptureResult CaptureEmulator::capture_tick(std::uint32_t frame_id, Nanos tick_ts) {
  CaptureResult r;
  const Nanos app_tx = profile_.app_tx.sample(app_tx_stream_);
  r.record.frame_id = frame_id;
  r.record.capture_start = tick_ts;
  r.record.capture_end = tick_ts + app_tx;
  if (app_tx >= profile_.interval()) {
    r.record.overrun = true;
    ++overruns_;
  }
  r.frame = make_synthetic_frame(frame_id, profile_.sections, seed_);
  r.frame.capture_start = r.record.capture_start;
  r.frame.capture_end = r.record.capture_end;
  if (profile_.busy_work) last_checksum_ = payload_checksum(r.frame.payload.span());
  return r;
}

AppRxRecord render_complete(const RenderProfile& profile, std::uint32_t frame_id, Nanos frame_complete_ts,
                            SeedStream& app_rx_stream) {
  AppRxRecord r;
  r.frame_id = frame_id;
  r.frame_complete_ts = frame_complete_ts;
  r.display_ts = frame_complete_ts + profile.app_rx.sample(app_rx_stream);
  return r;
}

std::uint64_t payload_checksum(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace vlab
