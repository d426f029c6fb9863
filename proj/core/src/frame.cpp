#include "vlab/frame.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "vlab/rng.hpp"

namespace vlab {

VolumetricFrame make_synthetic_frame(std::uint32_t frame_id, SectionSizes sections,
                                     std::uint64_t seed) {
  const std::uint64_t total = sections.total();
  if (total == 0) throw InvalidFrameError("frame " + std::to_string(frame_id) + ": all sections are empty");

  static const std::array<std::uint64_t, 512> base = [] {
    std::array<std::uint64_t, 512> t{};
    std::uint64_t st = 0x564C564C564C564CULL;
    for (auto& w : t) w = splitmix64(st);
    return t;
  }();
  std::uint64_t state = seed ^ (static_cast<std::uint64_t>(frame_id) * 0xD1B54A32D192ED03ULL);
  const std::uint64_t key = splitmix64(state);

  ByteVector bytes;
  bytes.reserve(static_cast<std::size_t>(total));
  std::uint64_t block[512];
  std::uint64_t v = key;
  while (bytes.size() < total) {
    for (std::size_t j = 0; j < 512; ++j) {
      v += 0x9E3779B97F4A7C15ULL;
      block[j] = base[j] ^ v;
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(block);
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(sizeof block, total - bytes.size()));
    bytes.insert(bytes.end(), p, p + n);
  }

  VolumetricFrame frame;
  frame.frame_id = frame_id;
  frame.sections = sections;
  frame.payload = SharedBytes(std::move(bytes));
  return frame;
}

std::vector<Segment> segment_frame(const VolumetricFrame& frame, std::size_t segment_payload_size) {
  if (segment_payload_size == 0) throw ConfigError("segment_payload_size must be >= 1");
  const std::size_t len = frame.payload.size();
  if (len == 0) throw InvalidFrameError("frame " + std::to_string(frame.frame_id) + ": empty payload");

  const std::uint64_t count = chunk_count(len, segment_payload_size);
  if (count > std::numeric_limits<std::uint16_t>::max()) {
    throw ConfigError("frame of " + std::to_string(len) + " bytes needs " + std::to_string(count) +
                      " segments; the wire format allows 65535");
  }

  std::vector<Segment> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t off = k * segment_payload_size;
    const std::size_t n = std::min(segment_payload_size, len - off);
    out.push_back(Segment{frame.frame_id, static_cast<std::uint16_t>(k + 1),
                          static_cast<std::uint16_t>(count), frame.payload.slice(off, n)});
  }
  return out;
}

}  // namespace vlab
