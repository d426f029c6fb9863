#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vlab/frame.hpp"
#include "vlab/pacer.hpp"
#include "vlab/units.hpp"
#include "vlab/wire.hpp"

namespace vlab {

class TransportError : public Error {
 public:
  using Error::Error;
};

class OversizeError : public TransportError {
 public:
  using TransportError::TransportError;
};

// ---------------------------------------------------------------------------
// Sender
// ---------------------------------------------------------------------------

struct SenderConfig {
  std::uint8_t stream_id = 1;
  std::uint64_t pacing_rate_bps = 2 * kGbps;
  std::size_t segment_payload_size = kDefaultSegmentPayload;
  std::size_t packet_payload_size = kDefaultPacketPayload;
  // Extra bytes charged per packet by the pacer (header and framing).
  std::uint32_t overhead_bytes = 0;
  std::size_t retention_frames = 8;
  std::uint64_t max_frame_bytes = 256 * kMbyte;
  // A fully emitted frame that is not acknowledged within this window gets
  // its final packet re-sent as a probe.
  Nanos ack_timeout{10'000'000};
  std::uint32_t max_tail_probes = 3;  // 0: unlimited
};

/// Per-frame sender record. The span covers first transmissions only:
/// `first_packet_send_ts` is when the first packet started onto the wire,
/// `last_packet_send_ts` when the last one finished.
struct SendLogEntry {
  std::uint32_t frame_id = 0;
  Nanos first_packet_send_ts{0};
  Nanos last_packet_send_ts{0};
  std::uint32_t packet_count = 0;
  std::uint32_t retransmit_count = 0;
  std::uint64_t bytes = 0;
  bool finished = false;  // every first transmission has left

  Nanos protocol_tx() const { return last_packet_send_ts - first_packet_send_ts; }
};

struct Emission {
  DataPacket packet;
  Nanos start;
  Nanos end;
};

struct SenderStats {
  std::uint64_t packets_first = 0;
  std::uint64_t packets_retransmitted = 0;
  std::uint64_t tail_probes = 0;
  std::uint64_t stale_nacks = 0;
  std::uint64_t nacks_received = 0;
  std::uint64_t acks_received = 0;

  std::uint64_t packets_sent() const { return packets_first + packets_retransmitted; }
};

/// Sending half of the reliable-datagram protocol. Sans-IO: the caller
/// decides when time advances and what happens to emitted packets.
///
/// Packets wait in two queues; retransmissions always go ahead of first
/// transmissions. Both share one pacer.
class SenderEndpoint {
 public:
  explicit SenderEndpoint(SenderConfig config);

  const SenderConfig& config() const { return config_; }

  /// Segments, packetizes and queues a whole frame.
  void enqueue_frame(const VolumetricFrame& frame, Nanos now);

  /// Queues one segment of a frame whose later segments may not exist yet.
  /// Segments of a frame must arrive in order. `segment.segment_count` is
  /// non-zero only for the final segment.
  void enqueue_segment(const Segment& segment, Nanos now);

  bool has_pending() const { return !retx_queue_.empty() || !first_queue_.empty(); }
  std::size_t queued_packets() const { return retx_queue_.size() + first_queue_.size(); }

  /// When the pacer will let the next queued packet go, or nullopt if idle.
  std::optional<Nanos> next_emission_time(Nanos now) const;

  /// Releases the head packet stamped with its emission start. The caller is
  /// expected to invoke this at or after next_emission_time().
  std::optional<Emission> emit(Nanos now);

  void on_control(const ControlPacket& control, Nanos now);

  /// Queues the packets named by a NACK. Returns how many were queued.
  std::size_t retransmit(const ControlPacket& nack, Nanos now);

  std::optional<Nanos> next_timer() const;
  void on_timer(Nanos now);

  const SendLogEntry* log(std::uint32_t frame_id) const;
  const std::map<std::uint32_t, SendLogEntry>& logs() const { return log_; }
  const SenderStats& stats() const { return stats_; }
  bool acked(std::uint32_t frame_id) const;

 private:
  struct PacketState {
    bool emitted = false;
    bool queued_retx = false;
  };
  struct FrameState {
    std::uint32_t frame_id = 0;
    std::vector<std::vector<DataPacket>> packets;  // [segment-1][seq-1]
    std::vector<std::vector<PacketState>> state;
    std::uint16_t segment_count = 0;  // 0 until the final segment is queued
    std::size_t first_unsent = 0;
    bool acked = false;
    bool armed = false;  // ack timer running
    Nanos ack_deadline{0};
    std::uint32_t probes = 0;
  };

  FrameState& frame_state(std::uint32_t frame_id, Nanos now);
  FrameState* find(std::uint32_t frame_id);
  const FrameState* find(std::uint32_t frame_id) const;
  void queue_retx(FrameState& fs, std::uint16_t seg, std::uint16_t seq);

  SenderConfig config_;
  TokenBucketPacer pacer_;
  std::deque<FrameState> retained_;
  std::deque<DataPacket> first_queue_;
  std::deque<DataPacket> retx_queue_;
  std::map<std::uint32_t, SendLogEntry> log_;
  SenderStats stats_;
};

/// Queues `frame` and drains the sender in virtual time, handing each
/// emission to `sink` at its pacing instant. A sink returning false means
/// the channel is closed. Returns the frame's send-log entry.
SendLogEntry send_frame(SenderEndpoint& sender, const VolumetricFrame& frame, Nanos now,
                        const std::function<bool(const Emission&)>& sink);

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

struct ReceiverConfig {
  std::uint8_t stream_id = 1;
  Nanos nack_delay{2'000'000};
  Nanos tail_timeout{5'000'000};
  // Interval before a packet already requested is asked for again.
  Nanos nack_retry{5'000'000};
  std::uint32_t max_nack_rounds = 3;  // 0: unlimited
  Nanos frame_deadline{66'666'666};   // 0: unlimited
  // Release completed segments in order as they finish (relay cut-through).
  bool release_segments = false;
  // Reassemble the frame payload on completion. A relay that forwards
  // released segments has no use for it.
  bool assemble_frames = true;
};

struct ReceiveLogEntry {
  std::uint32_t frame_id = 0;
  Nanos first_packet_recv_ts{0};
  Nanos last_packet_recv_ts{0};
  Nanos embedded_send_ts_of_first_packet{0};
  std::uint32_t nack_count = 0;
  std::uint32_t packets_received = 0;
  std::uint32_t duplicates = 0;
  bool completed = false;
  bool dropped = false;

  Nanos protocol_rx() const { return last_packet_recv_ts - first_packet_recv_ts; }
};

struct CompletedFrame {
  std::uint32_t frame_id = 0;
  std::uint16_t segment_count = 0;
  SharedBytes payload;
};

enum class RxEventKind { stored, duplicate, frame_complete, nack_emitted, late };

struct RxEvent {
  RxEventKind kind = RxEventKind::stored;
  std::optional<CompletedFrame> frame;
  // Packets to send back upstream: NACKs and FRAME_ACKs.
  std::vector<ControlPacket> control;
  // Newly releasable segments, in order (only with release_segments).
  std::vector<Segment> segments;
};

struct ReceiverStats {
  std::uint64_t packets_received = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t late_packets = 0;
  std::uint64_t nacks_sent = 0;
  std::uint64_t frames_completed = 0;
  std::uint64_t frames_expired = 0;
  std::uint64_t frames_abandoned = 0;
};

/// Receiving half: reassembly, gap detection, NACK generation, deadlines.
class ReceiverEndpoint {
 public:
  explicit ReceiverEndpoint(ReceiverConfig config);

  const ReceiverConfig& config() const { return config_; }

  RxEvent on_packet(const DataPacket& packet, Nanos now);

  /// Missing (segment, seq) ranges of a partially received frame that are
  /// older than the highest packet seen, plus any open-ended tail request.
  /// Pure query: does not mark anything as requested.
  std::vector<NackRange> detect_gaps(std::uint32_t frame_id) const;

  std::optional<Nanos> next_timer() const;

  /// Emits due NACKs and expires frames. Dropped frame ids are appended to
  /// `dropped` when provided.
  std::vector<ControlPacket> on_timer(Nanos now, std::vector<std::uint32_t>* dropped = nullptr);

  const ReceiveLogEntry* log(std::uint32_t frame_id) const;
  const std::map<std::uint32_t, ReceiveLogEntry>& logs() const { return log_; }
  const ReceiverStats& stats() const { return stats_; }
  std::size_t active_frames() const { return active_.size(); }

 private:
  // Key for (segment, seq); seq 0 marks a whole segment whose packet count
  // is still unknown.
  using Key = std::uint32_t;
  static Key key(std::uint16_t seg, std::uint16_t seq) { return (Key(seg) << 16) | seq; }

  struct Hole {
    Nanos detected{0};
    std::optional<Nanos> requested;
    std::uint32_t requests = 0;
  };
  struct SegmentSlot {
    std::uint16_t packets = 0;  // 0: unknown
    std::uint16_t received = 0;
    bool last = false;
    std::vector<SharedBytes> payloads;
    SharedBytes joined;  // set once released
    bool complete() const { return packets != 0 && received == packets; }
  };
  struct RxFrame {
    std::vector<SegmentSlot> segments;
    std::uint16_t last_segment = 0;  // 0: unknown
    std::uint16_t complete_segments = 0;
    std::uint16_t released = 0;
    Key highest = 0;
    std::map<Key, Hole> holes;
    Nanos first_seen{0};
    Nanos last_arrival{0};
    std::uint32_t rounds = 0;  // most requests spent on any one hole or the tail
    std::uint32_t tail_requests = 0;
    std::optional<Nanos> last_nack;
    std::optional<Nanos> last_tail_nack;
    Nanos hole_hint{Nanos::max()};
  };

  bool tail_missing(const RxFrame& f) const;
  std::optional<NackRange> tail_range(const RxFrame& f) const;
  std::optional<ControlPacket> maybe_nack(std::uint32_t frame_id, RxFrame& f, Nanos now);
  std::optional<Nanos> frame_timer(const RxFrame& f) const;
  void note_holes(RxFrame& f, std::uint16_t seg, std::uint16_t seq, Nanos now);
  void drop(std::uint32_t frame_id, bool expired);
  void remember_finished(std::uint32_t frame_id);
  void release_ready(std::uint32_t frame_id, RxFrame& f, RxEvent& ev);
  CompletedFrame assemble(std::uint32_t frame_id, const RxFrame& f) const;
  ControlPacket ack(std::uint32_t frame_id) const;

  ReceiverConfig config_;
  std::map<std::uint32_t, RxFrame> active_;
  std::set<std::uint32_t> completed_ids_;
  std::set<std::uint32_t> dropped_ids_;
  std::map<std::uint32_t, ReceiveLogEntry> log_;
  ReceiverStats stats_;
};

}  // namespace vlab
