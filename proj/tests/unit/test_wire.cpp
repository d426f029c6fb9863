#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vlab/wire.hpp"

using namespace vlab;

namespace {

DataPacket sample_data() {
  DataPacket p;
  p.header.packet_type = PacketType::data;
  p.header.flags = flags::kLastSegment | flags::kRetransmit;
  p.header.stream_id = 9;
  p.header.frame_id = 0x01020304;
  p.header.segment_index = 0x0506;
  p.header.packet_seq = 2;
  p.header.packets_in_segment = 3;
  p.payload = SharedBytes(ByteVector{0xAA, 0xBB, 0xCC});
  p.header.payload_length = 3;
  p.header.send_timestamp = 0x1122334455667788ULL;
  return p;
}

// Header laid out by hand from the field table.
ByteVector hand_encoded(const DataPacket& p) {
  ByteVector out;
  oracle::put_be(out, 0x564C, 2);
  oracle::put_be(out, 1, 1);
  oracle::put_be(out, 1, 1);
  oracle::put_be(out, p.header.flags, 1);
  oracle::put_be(out, p.header.stream_id, 1);
  oracle::put_be(out, p.header.frame_id, 4);
  oracle::put_be(out, p.header.segment_index, 2);
  oracle::put_be(out, p.header.packet_seq, 2);
  oracle::put_be(out, p.header.packets_in_segment, 2);
  oracle::put_be(out, p.header.payload_length, 2);
  oracle::put_be(out, p.header.send_timestamp, 8);
  oracle::put_be(out, 0, 6);
  const auto s = p.payload.span();
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::string decode_field(const ByteVector& bytes) {
  try {
    decode_packet(std::span<const std::uint8_t>(bytes));
  } catch (const DecodeError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Wire, HeaderIs32BytesBigEndian) {
  const auto p = sample_data();
  const auto bytes = encode_packet(p);
  EXPECT_EQ(bytes.size(), kHeaderSize + 3);
  EXPECT_EQ(bytes, hand_encoded(p));
}

TEST(Wire, DataRoundTrip) {
  const auto p = sample_data();
  const auto decoded = decode_packet(encode_packet(p));
  ASSERT_TRUE(std::holds_alternative<DataPacket>(decoded));
  EXPECT_EQ(std::get<DataPacket>(decoded), p);
}

TEST(Wire, ZeroCopyDecodeSharesTheDatagram) {
  const SharedBytes datagram(encode_packet(sample_data()));
  const auto decoded = decode_packet(datagram);
  EXPECT_EQ(std::get<DataPacket>(decoded).payload.data(), datagram.data() + kHeaderSize);
}

TEST(Wire, ControlRoundTrips) {
  ControlPacket nack;
  nack.packet_type = PacketType::nack;
  nack.flags = flags::kTail;
  nack.frame_id = 77;
  nack.ranges = {{1, 3, 5}, {1, 9, 9}, {4, 1, kSeqToEnd}};
  nack.send_timestamp = 5;
  EXPECT_EQ(std::get<ControlPacket>(decode_packet(encode_packet(nack))), nack);

  ControlPacket ack;
  ack.packet_type = PacketType::frame_ack;
  ack.frame_id = 12;
  EXPECT_EQ(std::get<ControlPacket>(decode_packet(encode_packet(ack))), ack);

  ControlPacket sync;
  sync.packet_type = PacketType::sync_resp;
  sync.frame_id = 3;
  sync.sync = {1, 2, 3, 4};
  EXPECT_EQ(std::get<ControlPacket>(decode_packet(encode_packet(sync))), sync);
}

TEST(Wire, ShortBufferIsRejected) {
  const ByteVector b(31, 0);
  EXPECT_EQ(decode_field(b), "header");
}

TEST(Wire, UnsupportedVersionIsRejected) {
  auto b = encode_packet(sample_data());
  b[2] = 255;
  EXPECT_EQ(decode_field(b), "version");
}

TEST(Wire, MalformedFieldsAreNamed) {
  const auto good = encode_packet(sample_data());
  auto bad_magic = good;
  bad_magic[0] = 0;
  EXPECT_EQ(decode_field(bad_magic), "magic");
  auto bad_type = good;
  bad_type[3] = 9;
  EXPECT_EQ(decode_field(bad_type), "packet_type");
  auto bad_flags = good;
  bad_flags[4] = 0x80;
  EXPECT_EQ(decode_field(bad_flags), "flags");
  auto bad_reserved = good;
  bad_reserved[31] = 1;
  EXPECT_EQ(decode_field(bad_reserved), "reserved");
  auto truncated = good;
  truncated.pop_back();
  EXPECT_EQ(decode_field(truncated), "payload_length");
  auto bad_seq = good;
  bad_seq[12] = 0;
  bad_seq[13] = 9;
  EXPECT_EQ(decode_field(bad_seq), "packet_seq");
}

TEST(Wire, NackRangeValidation) {
  EXPECT_TRUE(nack_ranges_valid(std::vector<NackRange>{{3, 5, 5}}));
  EXPECT_TRUE(nack_ranges_valid(std::vector<NackRange>{{3, 5, 5}, {3, 9, 10}}));
  EXPECT_FALSE(nack_ranges_valid(std::vector<NackRange>{}));
  EXPECT_FALSE(nack_ranges_valid(std::vector<NackRange>{{3, 5, 6}, {3, 6, 7}}));
  EXPECT_FALSE(nack_ranges_valid(std::vector<NackRange>{{4, 1, 1}, {3, 1, 1}}));
  EXPECT_FALSE(nack_ranges_valid(std::vector<NackRange>{{0, 1, 1}}));
  EXPECT_FALSE(nack_ranges_valid(std::vector<NackRange>{{1, 5, 4}}));
}

TEST(Wire, EncodeRejectsInconsistentLength) {
  auto p = sample_data();
  p.header.payload_length = 4;
  EXPECT_THROW(encode_packet(p), Error);
}
