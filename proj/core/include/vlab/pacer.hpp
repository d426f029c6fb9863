#pragma once

#include <cstdint>

#include "vlab/units.hpp"

namespace vlab {

/// Token bucket refilled continuously at the pacing rate, one packet deep.
///
/// An idle bucket releases the next packet immediately; a busy one releases
/// it when the previous packet's bits have drained. Emission instants within
/// a busy period are computed from cumulative bits, so a back-to-back run of
/// N bytes spans exactly ceil(N*8/rate) ns with no per-packet rounding drift.
class TokenBucketPacer {
 public:
  struct Slot {
    Nanos start;
    Nanos end;
  };

  TokenBucketPacer(std::uint64_t rate_bps, std::uint32_t overhead_bytes_per_packet);

  /// Reserves the channel for one packet carrying `payload_bytes`.
  Slot reserve(Nanos now, std::size_t payload_bytes);

  /// Earliest instant the next packet may start.
  Nanos next_free() const { return next_free_; }

  std::uint64_t rate_bps() const { return rate_bps_; }
  std::uint64_t wire_bits(std::size_t payload_bytes) const {
    return (static_cast<std::uint64_t>(payload_bytes) + overhead_bytes_) * 8;
  }

 private:
  std::uint64_t rate_bps_;
  std::uint32_t overhead_bytes_;
  bool started_ = false;
  Nanos period_origin_{0};
  std::uint64_t period_bits_ = 0;
  Nanos next_free_{0};
};

}  // namespace vlab
