#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vlab/bytes.hpp"
#include "vlab/frame.hpp"
#include "vlab/units.hpp"

namespace vlab {

// Wire header, 32 bytes, big-endian:
//
//   0      2   3    4     5      6          10     12    14      16      18            26       32
//   +------+---+----+-----+------+----------+------+-----+-------+-------+-------------+--------+
//   |magic |ver|type|flags|stream| frame_id | seg  | seq | pkts  | len   | send_ts ns  |reserved|
//   +------+---+----+-----+------+----------+------+-----+-------+-------+-------------+--------+
//
// `len` counts the bytes that follow the header. Reserved bytes are zero.
constexpr std::uint16_t kWireMagic = 0x564C;
constexpr std::uint8_t kWireVersion = 0x01;
constexpr std::size_t kHeaderSize = 32;
constexpr std::size_t kMaxPayload = 0xFFFF;

enum class PacketType : std::uint8_t {
  data = 1,
  nack = 2,
  frame_ack = 3,
  sync_req = 4,
  sync_resp = 5,
};

namespace flags {
constexpr std::uint8_t kLastSegment = 0x01;  // data: packet belongs to the frame's final segment
constexpr std::uint8_t kRetransmit = 0x02;   // data: not a first transmission
constexpr std::uint8_t kTail = 0x04;         // nack: also resend every segment after the last range
constexpr std::uint8_t kKnown = kLastSegment | kRetransmit | kTail;
}  // namespace flags

struct PacketHeader {
  std::uint8_t version = kWireVersion;
  PacketType packet_type = PacketType::data;
  std::uint8_t flags = 0;
  std::uint8_t stream_id = 0;
  std::uint32_t frame_id = 0;
  std::uint16_t segment_index = 0;
  std::uint16_t packet_seq = 0;
  std::uint16_t packets_in_segment = 0;
  std::uint16_t payload_length = 0;
  std::uint64_t send_timestamp = 0;

  friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

struct DataPacket {
  PacketHeader header;
  SharedBytes payload;

  bool last_segment() const { return (header.flags & flags::kLastSegment) != 0; }
  bool retransmit() const { return (header.flags & flags::kRetransmit) != 0; }

  friend bool operator==(const DataPacket&, const DataPacket&) = default;
};

/// Inclusive run of missing packets inside one segment. A last_seq of
/// kSeqToEnd means "through the end of the segment", used when the receiver
/// has not yet learned the segment's packet count.
struct NackRange {
  std::uint16_t segment_index = 0;
  std::uint16_t first_seq = 0;
  std::uint16_t last_seq = 0;

  friend bool operator==(const NackRange&, const NackRange&) = default;
  friend auto operator<=>(const NackRange&, const NackRange&) = default;
};

constexpr std::uint16_t kSeqToEnd = 0xFFFF;

struct SyncTimestamps {
  std::uint64_t t1 = 0;  // slave send
  std::uint64_t t2 = 0;  // master receive
  std::uint64_t t3 = 0;  // master send
  std::uint64_t t4 = 0;  // slave receive

  friend bool operator==(const SyncTimestamps&, const SyncTimestamps&) = default;
};

/// NACK, FRAME_ACK, SYNC_REQ and SYNC_RESP. For sync packets `frame_id`
/// carries the exchange sequence number.
struct ControlPacket {
  PacketType packet_type = PacketType::nack;
  std::uint8_t flags = 0;
  std::uint8_t stream_id = 0;
  std::uint32_t frame_id = 0;
  std::uint64_t send_timestamp = 0;
  std::vector<NackRange> ranges;
  SyncTimestamps sync;

  bool tail() const { return (flags & flags::kTail) != 0; }

  friend bool operator==(const ControlPacket&, const ControlPacket&) = default;
};

using Packet = std::variant<DataPacket, ControlPacket>;

class DecodeError : public Error {
 public:
  DecodeError(std::string field, const std::string& what)
      : Error("decode " + field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

ByteVector encode_packet(const DataPacket& packet);
ByteVector encode_packet(const ControlPacket& packet);
ByteVector encode_packet(const Packet& packet);

/// Parses a datagram. The returned DataPacket owns a copy of the payload.
Packet decode_packet(std::span<const std::uint8_t> bytes);

/// Same, but the payload is a view into `datagram` (no copy).
Packet decode_packet(const SharedBytes& datagram);

/// Valid NACK ranges are non-empty, sorted, and do not overlap.
bool nack_ranges_valid(std::span<const NackRange> ranges);

/// Splits one segment into ceil(len / packet_payload_size) data packets with
/// 1-based packet_seq. Send timestamps are left zero for the emitter to fill.
std::vector<DataPacket> packetize_segment(const Segment& segment, std::size_t packet_payload_size,
                                          std::uint8_t stream_id = 0);

}  // namespace vlab
