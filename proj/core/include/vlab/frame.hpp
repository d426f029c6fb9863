#pragma once

#include <cstdint>
#include <vector>

#include "vlab/bytes.hpp"
#include "vlab/units.hpp"

namespace vlab {

constexpr std::size_t kDefaultSegmentPayload = 65'000;
constexpr std::size_t kDefaultPacketPayload = 1'400;
// With 452-byte packets one 65,000-byte segment is exactly 144 packets.
constexpr std::size_t kPacket144Payload = 452;

class InvalidFrameError : public Error {
 public:
  using Error::Error;
};

struct SectionSizes {
  std::uint64_t color_bytes = 0;
  std::uint64_t depth_bytes = 0;
  std::uint64_t audio_bytes = 0;

  std::uint64_t total() const { return color_bytes + depth_bytes + audio_bytes; }
};

/// One capture interval: color, depth and audio sections laid out back to
/// back in `payload`, plus the capture bracket stamped by the producer.
struct VolumetricFrame {
  std::uint32_t frame_id = 0;
  SectionSizes sections;
  SharedBytes payload;
  Nanos capture_start{0};
  Nanos capture_end{0};

  std::uint64_t size() const { return payload.size(); }
};

struct Segment {
  std::uint32_t frame_id = 0;
  std::uint16_t segment_index = 0;  // 1-based
  std::uint16_t segment_count = 0;  // 0 while unknown (cut-through forwarding)
  SharedBytes payload;
};

/// Seeded pseudo-random frame content; a pure function of its arguments.
VolumetricFrame make_synthetic_frame(std::uint32_t frame_id, SectionSizes sections,
                                     std::uint64_t seed);

/// Splits the frame payload into ceil(len / segment_payload_size) segments.
/// Segments share the frame's storage.
std::vector<Segment> segment_frame(const VolumetricFrame& frame, std::size_t segment_payload_size);

/// ceil(bytes / chunk), the count used for both segments and packets.
constexpr std::uint64_t chunk_count(std::uint64_t bytes, std::uint64_t chunk) {
  return chunk == 0 ? 0 : (bytes + chunk - 1) / chunk;
}

/// Bit rate needed to carry `frame_bytes` every 1/fps seconds.
constexpr double required_bandwidth_bps(std::uint64_t frame_bytes, double fps) {
  return static_cast<double>(frame_bytes) * 8.0 * fps;
}

}  // namespace vlab
