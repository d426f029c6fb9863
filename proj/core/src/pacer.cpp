#include "vlab/pacer.hpp"

#include <algorithm>

namespace vlab {

TokenBucketPacer::TokenBucketPacer(std::uint64_t rate_bps, std::uint32_t overhead_bytes_per_packet)
    : rate_bps_(rate_bps), overhead_bytes_(overhead_bytes_per_packet) {
  if (rate_bps == 0) throw ConfigError("pacing rate must be > 0");
}

TokenBucketPacer::Slot TokenBucketPacer::reserve(Nanos now, std::size_t payload_bytes) {
  if (!started_ || now > next_free_) {
    // Idle: the bucket is full, start a new busy period here.
    started_ = true;
    period_origin_ = now;
    period_bits_ = 0;
  }
  const Nanos start = std::max(now, next_free_);
  period_bits_ += wire_bits(payload_bytes);
  next_free_ = period_origin_ + serialization_time(period_bits_, rate_bps_);
  return {start, next_free_};
}

}  // namespace vlab
