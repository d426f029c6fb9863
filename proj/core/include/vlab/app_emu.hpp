#pragma once

#include <cstdint>
#include <string>

#include "vlab/frame.hpp"
#include "vlab/rng.hpp"
#include "vlab/units.hpp"

namespace vlab {

/// A processing-time distribution: fixed, or uniform over [lo, hi].
struct DurationDist {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::fixed;
  Nanos lo{0};
  Nanos hi{0};

  static DurationDist fixed(Nanos d) { return {Kind::fixed, d, d}; }
  static DurationDist uniform(Nanos lo, Nanos hi) { return {Kind::uniform, lo, hi}; }

  /// "7.3ms" or "uniform(20ms,24ms)".
  static DurationDist parse(const std::string& text);
  std::string to_string() const;

  Nanos sample(SeedStream& stream) const;
  Nanos max() const { return hi; }
};

struct CaptureProfile {
  double fps = 30.0;
  DurationDist app_tx = DurationDist::fixed(Nanos(7'300'000));
  SectionSizes sections{1'400'000, 1'920'000, 200'000};
  // Run a real checksum over each produced frame.
  bool busy_work = false;

  /// Start of the k-th capture interval, floor(k * 1e9 / fps) ns.
  Nanos tick_time(std::uint64_t k) const;
  Nanos interval() const { return tick_time(1); }
  /// Number of ticks that start strictly before `duration`.
  std::uint64_t frames_in(Nanos duration) const;
};

struct RenderProfile {
  DurationDist app_rx = DurationDist::fixed(Nanos(22'000'000));
  bool busy_work = false;
};

struct AppTxRecord {
  std::uint32_t frame_id = 0;
  Nanos capture_start{0};
  Nanos capture_end{0};
  bool overrun = false;

  Nanos app_tx() const { return capture_end - capture_start; }
};

struct AppRxRecord {
  std::uint32_t frame_id = 0;
  Nanos frame_complete_ts{0};
  Nanos display_ts{0};

  Nanos app_rx() const { return display_ts - frame_complete_ts; }
};

struct CaptureResult {
  VolumetricFrame frame;
  AppTxRecord record;
};

/// Capture side: produces one synthetic frame per tick.
class CaptureEmulator {
 public:
  CaptureEmulator(CaptureProfile profile, std::uint64_t seed);

  /// `tick_ts` is the local capture start. The frame is ready for the
  /// transport at record.capture_end.
  CaptureResult capture_tick(std::uint32_t frame_id, Nanos tick_ts);

  const CaptureProfile& profile() const { return profile_; }
  std::uint64_t overruns() const { return overruns_; }
  std::uint64_t last_checksum() const { return last_checksum_; }

 private:
  CaptureProfile profile_;
  std::uint64_t seed_;
  SeedStream app_tx_stream_;
  std::uint64_t overruns_ = 0;
  std::uint64_t last_checksum_ = 0;
};

/// display_ts = frame_complete_ts + sampled app_rx.
AppRxRecord render_complete(const RenderProfile& profile, std::uint32_t frame_id, Nanos frame_complete_ts,
                            SeedStream& app_rx_stream);

/// FNV-1a over the payload; the busy-work pass.
std::uint64_t payload_checksum(std::span<const std::uint8_t> bytes);

}  // namespace vlab
