#include "vlab/wire.hpp"

#include <algorithm>
#include <limits>

namespace vlab {
namespace {

class Writer {
 public:
  explicit Writer(ByteVector& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v >> 32));
    u32(static_cast<std::uint32_t>(v));
  }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

 private:
  ByteVector& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const auto hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::uint64_t u64() {
    const std::uint64_t hi = u32();
    return (hi << 32) | u32();
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_header(Writer& w, const PacketHeader& h) {
  w.u16(kWireMagic);
  w.u8(h.version);
  w.u8(static_cast<std::uint8_t>(h.packet_type));
  w.u8(h.flags);
  w.u8(h.stream_id);
  w.u32(h.frame_id);
  w.u16(h.segment_index);
  w.u16(h.packet_seq);
  w.u16(h.packets_in_segment);
  w.u16(h.payload_length);
  w.u64(h.send_timestamp);
  w.zeros(6);
}

bool known_type(std::uint8_t t) { return t >= 1 && t <= 5; }

constexpr std::size_t kRangeSize = 6;
constexpr std::size_t kSyncPayloadSize = 32;

PacketHeader read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw DecodeError("header", "short buffer: " + std::to_string(bytes.size()) + " < " +
                                    std::to_string(kHeaderSize) + " bytes");
  }
  Reader r(bytes);
  if (r.u16() != kWireMagic) throw DecodeError("magic", "bad magic");
  PacketHeader h;
  h.version = r.u8();
  if (h.version != kWireVersion) {
    throw DecodeError("version", "unsupported version " + std::to_string(h.version));
  }
  const std::uint8_t type = r.u8();
  if (!known_type(type)) throw DecodeError("packet_type", "unknown type " + std::to_string(type));
  h.packet_type = static_cast<PacketType>(type);
  h.flags = r.u8();
  if ((h.flags & ~flags::kKnown) != 0) {
    throw DecodeError("flags", "unknown flag bits " + std::to_string(h.flags));
  }
  h.stream_id = r.u8();
  h.frame_id = r.u32();
  h.segment_index = r.u16();
  h.packet_seq = r.u16();
  h.packets_in_segment = r.u16();
  h.payload_length = r.u16();
  h.send_timestamp = r.u64();
  for (std::size_t i = r.pos(); i < kHeaderSize; ++i) {
    if (bytes[i] != 0) throw DecodeError("reserved", "reserved bytes must be zero");
  }
  if (bytes.size() - kHeaderSize != h.payload_length) {
    throw DecodeError("payload_length", "header says " + std::to_string(h.payload_length) +
                                            " bytes, datagram carries " +
                                            std::to_string(bytes.size() - kHeaderSize));
  }
  return h;
}

void check_data_header(const PacketHeader& h) {
  if (h.segment_index == 0) throw DecodeError("segment_index", "must be >= 1");
  if (h.packets_in_segment == 0) throw DecodeError("packets_in_segment", "must be >= 1");
  if (h.packet_seq == 0 || h.packet_seq > h.packets_in_segment) {
    throw DecodeError("packet_seq", "must be in [1, packets_in_segment]");
  }
  if (h.payload_length == 0) throw DecodeError("payload_length", "data packet without payload");
  if ((h.flags & flags::kTail) != 0) throw DecodeError("flags", "tail flag on data packet");
}

ControlPacket decode_control(const PacketHeader& h, std::span<const std::uint8_t> body) {
  if (h.segment_index != 0 || h.packet_seq != 0 || h.packets_in_segment != 0) {
    throw DecodeError("segment_index", "control packets carry no segment coordinates");
  }
  if ((h.flags & (flags::kLastSegment | flags::kRetransmit)) != 0) {
    throw DecodeError("flags", "data-only flag on control packet");
  }
  ControlPacket c;
  c.packet_type = h.packet_type;
  c.flags = h.flags;
  c.stream_id = h.stream_id;
  c.frame_id = h.frame_id;
  c.send_timestamp = h.send_timestamp;
  Reader r(body);
  switch (h.packet_type) {
    case PacketType::nack: {
      if (body.size() < 2) throw DecodeError("nack", "missing range count");
      const std::size_t n = r.u16();
      if (n == 0) throw DecodeError("nack", "empty range list");
      if (body.size() != 2 + n * kRangeSize) throw DecodeError("nack", "range count does not match length");
      c.ranges.resize(n);
      for (auto& range : c.ranges) {
        range.segment_index = r.u16();
        range.first_seq = r.u16();
        range.last_seq = r.u16();
      }
      if (!nack_ranges_valid(c.ranges)) throw DecodeError("nack", "ranges empty, unsorted or overlapping");
      break;
    }
    case PacketType::frame_ack:
      if (!body.empty()) throw DecodeError("frame_ack", "unexpected payload");
      if (h.flags != 0) throw DecodeError("flags", "frame_ack carries no flags");
      break;
    case PacketType::sync_req:
    case PacketType::sync_resp:
      if (body.size() != kSyncPayloadSize) throw DecodeError("sync", "payload must be 32 bytes");
      if (h.flags != 0) throw DecodeError("flags", "sync packets carry no flags");
      c.sync.t1 = r.u64();
      c.sync.t2 = r.u64();
      c.sync.t3 = r.u64();
      c.sync.t4 = r.u64();
      break;
    case PacketType::data:
      break;
  }
  if (h.packet_type != PacketType::nack && c.tail()) throw DecodeError("flags", "tail flag outside nack");
  return c;
}

template <typename PayloadFactory>
Packet decode_impl(std::span<const std::uint8_t> bytes, PayloadFactory&& make_payload) {
  const PacketHeader h = read_header(bytes);
  const auto body = bytes.subspan(kHeaderSize);
  if (h.packet_type == PacketType::data) {
    check_data_header(h);
    return DataPacket{h, make_payload()};
  }
  return decode_control(h, body);
}

}  // namespace

bool nack_ranges_valid(std::span<const NackRange> ranges) {
  if (ranges.empty()) return false;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& r = ranges[i];
    if (r.segment_index == 0 || r.first_seq == 0 || r.first_seq > r.last_seq) return false;
    if (i > 0) {
      const auto& p = ranges[i - 1];
      if (p.segment_index > r.segment_index) return false;
      if (p.segment_index == r.segment_index && p.last_seq >= r.first_seq) return false;
    }
  }
  return true;
}

ByteVector encode_packet(const DataPacket& packet) {
  const auto& h = packet.header;
  if (h.packet_type != PacketType::data) throw Error("encode: data packet with non-data type");
  if (h.payload_length != packet.payload.size()) {
    throw Error("encode: payload_length " + std::to_string(h.payload_length) + " != payload size " +
                std::to_string(packet.payload.size()));
  }
  ByteVector out;
  out.reserve(kHeaderSize + packet.payload.size());
  Writer w(out);
  write_header(w, h);
  const auto p = packet.payload.span();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

ByteVector encode_packet(const ControlPacket& packet) {
  ByteVector body;
  Writer b(body);
  switch (packet.packet_type) {
    case PacketType::nack:
      if (!nack_ranges_valid(packet.ranges)) throw Error("encode: invalid nack ranges");
      b.u16(static_cast<std::uint16_t>(packet.ranges.size()));
      for (const auto& r : packet.ranges) {
        b.u16(r.segment_index);
        b.u16(r.first_seq);
        b.u16(r.last_seq);
      }
      break;
    case PacketType::sync_req:
    case PacketType::sync_resp:
      b.u64(packet.sync.t1);
      b.u64(packet.sync.t2);
      b.u64(packet.sync.t3);
      b.u64(packet.sync.t4);
      break;
    case PacketType::frame_ack:
      break;
    case PacketType::data:
      throw Error("encode: control packet with data type");
  }
  if (body.size() > kMaxPayload) throw Error("encode: control payload too large");

  PacketHeader h;
  h.packet_type = packet.packet_type;
  h.flags = packet.flags;
  h.stream_id = packet.stream_id;
  h.frame_id = packet.frame_id;
  h.payload_length = static_cast<std::uint16_t>(body.size());
  h.send_timestamp = packet.send_timestamp;

  ByteVector out;
  out.reserve(kHeaderSize + body.size());
  Writer w(out);
  write_header(w, h);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

ByteVector encode_packet(const Packet& packet) {
  return std::visit([](const auto& p) { return encode_packet(p); }, packet);
}

Packet decode_packet(std::span<const std::uint8_t> bytes) {
  return decode_impl(bytes, [&] {
    auto body = bytes.subspan(kHeaderSize);
    return SharedBytes(ByteVector(body.begin(), body.end()));
  });
}

Packet decode_packet(const SharedBytes& datagram) {
  return decode_impl(datagram.span(), [&] {
    return datagram.slice(kHeaderSize, datagram.size() - kHeaderSize);
  });
}

std::vector<DataPacket> packetize_segment(const Segment& segment, std::size_t packet_payload_size,
                                          std::uint8_t stream_id) {
  if (packet_payload_size == 0) throw ConfigError("packet_payload_size must be >= 1");
  if (packet_payload_size > kMaxPayload) {
    throw ConfigError("packet_payload_size " + std::to_string(packet_payload_size) +
                      " exceeds the 16-bit payload_length field");
  }
  const std::size_t len = segment.payload.size();
  if (len == 0) throw InvalidFrameError("segment " + std::to_string(segment.segment_index) + " is empty");
  const std::uint64_t count = chunk_count(len, packet_payload_size);
  if (count > std::numeric_limits<std::uint16_t>::max()) {
    throw ConfigError("segment needs " + std::to_string(count) + " packets; the wire format allows 65535");
  }

  const bool last = segment.segment_count != 0 && segment.segment_index == segment.segment_count;
  std::vector<DataPacket> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t off = k * packet_payload_size;
    const std::size_t n = std::min(packet_payload_size, len - off);
    DataPacket p;
    p.header.packet_type = PacketType::data;
    p.header.flags = last ? flags::kLastSegment : 0;
    p.header.stream_id = stream_id;
    p.header.frame_id = segment.frame_id;
    p.header.segment_index = segment.segment_index;
    p.header.packet_seq = static_cast<std::uint16_t>(k + 1);
    p.header.packets_in_segment = static_cast<std::uint16_t>(count);
    p.header.payload_length = static_cast<std::uint16_t>(n);
    p.payload = segment.payload.slice(off, n);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace vlab
