#include <algorithm>

#include "vlab/transport.hpp"

namespace vlab {

SenderEndpoint::SenderEndpoint(SenderConfig config)
    : config_(config), pacer_(config.pacing_rate_bps, config.overhead_bytes) {
  if (config_.packet_payload_size == 0) throw ConfigError("packet_payload_size must be >= 1");
  if (config_.segment_payload_size == 0) throw ConfigError("segment_payload_size must be >= 1");
  if (config_.retention_frames == 0) throw ConfigError("retention_frames must be >= 1");
}

SenderEndpoint::FrameState* SenderEndpoint::find(std::uint32_t frame_id) {
  for (auto& fs : retained_) {
    if (fs.frame_id == frame_id) return &fs;
  }
  return nullptr;
}

const SenderEndpoint::FrameState* SenderEndpoint::find(std::uint32_t frame_id) const {
  for (const auto& fs : retained_) {
    if (fs.frame_id == frame_id) return &fs;
  }
  return nullptr;
}

SenderEndpoint::FrameState& SenderEndpoint::frame_state(std::uint32_t frame_id, Nanos) {
  if (auto* fs = find(frame_id)) return *fs;
  retained_.push_back(FrameState{});
  retained_.back().frame_id = frame_id;
  while (retained_.size() > config_.retention_frames) retained_.pop_front();
  auto& entry = log_[frame_id];
  entry.frame_id = frame_id;
  return retained_.back();
}

void SenderEndpoint::enqueue_frame(const VolumetricFrame& frame, Nanos now) {
  if (frame.size() > config_.max_frame_bytes) {
    throw OversizeError("frame " + std::to_string(frame.frame_id) + " is " + std::to_string(frame.size()) +
                        " bytes; limit is " + std::to_string(config_.max_frame_bytes));
  }
  for (const auto& segment : segment_frame(frame, config_.segment_payload_size)) {
    enqueue_segment(segment, now);
  }
}

void SenderEndpoint::enqueue_segment(const Segment& segment, Nanos now) {
  FrameState& fs = frame_state(segment.frame_id, now);
  if (fs.segment_count != 0) {
    throw TransportError("frame " + std::to_string(segment.frame_id) + ": segment after the final one");
  }
  if (segment.segment_index != fs.packets.size() + 1) {
    throw TransportError("frame " + std::to_string(segment.frame_id) + ": segment " +
                         std::to_string(segment.segment_index) + " queued out of order");
  }
  auto& entry = log_[segment.frame_id];
  if (entry.bytes + segment.payload.size() > config_.max_frame_bytes) {
    throw OversizeError("frame " + std::to_string(segment.frame_id) + " exceeds " +
                        std::to_string(config_.max_frame_bytes) + " bytes");
  }
  auto packets = packetize_segment(segment, config_.packet_payload_size, config_.stream_id);
  fs.state.emplace_back(packets.size());
  for (const auto& p : packets) first_queue_.push_back(p);
  fs.packets.push_back(std::move(packets));
  entry.bytes += segment.payload.size();
  if (segment.segment_count != 0 && segment.segment_index == segment.segment_count) {
    fs.segment_count = segment.segment_count;
  }
}

std::optional<Nanos> SenderEndpoint::next_emission_time(Nanos now) const {
  if (!has_pending()) return std::nullopt;
  return std::max(now, pacer_.next_free());
}

std::optional<Emission> SenderEndpoint::emit(Nanos now) {
  auto& queue = retx_queue_.empty() ? first_queue_ : retx_queue_;
  if (queue.empty()) return std::nullopt;
  DataPacket packet = std::move(queue.front());
  queue.pop_front();

  const auto slot = pacer_.reserve(now, packet.payload.size());
  packet.header.send_timestamp = static_cast<std::uint64_t>(slot.start.count());

  const auto& h = packet.header;
  auto& entry = log_[h.frame_id];
  FrameState* fs = find(h.frame_id);
  if (packet.retransmit()) {
    ++stats_.packets_retransmitted;
    ++entry.retransmit_count;
    if (fs) fs->state[h.segment_index - 1][h.packet_seq - 1].queued_retx = false;
  } else {
    ++stats_.packets_first;
    if (entry.packet_count == 0) entry.first_packet_send_ts = slot.start;
    entry.last_packet_send_ts = slot.end;
    ++entry.packet_count;
    if (fs) {
      fs->state[h.segment_index - 1][h.packet_seq - 1].emitted = true;
      ++fs->first_unsent;
      const bool final_packet = fs->segment_count != 0 && h.segment_index == fs->segment_count &&
                                h.packet_seq == h.packets_in_segment;
      if (final_packet) {
        entry.finished = true;
        fs->armed = true;
        fs->ack_deadline = slot.end + config_.ack_timeout;
      }
    }
  }
  return Emission{std::move(packet), slot.start, slot.end};
}

void SenderEndpoint::queue_retx(FrameState& fs, std::uint16_t seg, std::uint16_t seq) {
  auto& st = fs.state[seg - 1][seq - 1];
  if (!st.emitted || st.queued_retx) return;
  DataPacket copy = fs.packets[seg - 1][seq - 1];
  copy.header.flags |= flags::kRetransmit;
  retx_queue_.push_back(std::move(copy));
  st.queued_retx = true;
}

std::size_t SenderEndpoint::retransmit(const ControlPacket& nack, Nanos) {
  FrameState* fs = find(nack.frame_id);
  if (fs == nullptr) {
    ++stats_.stale_nacks;
    return 0;
  }
  const std::size_t before = retx_queue_.size();
  const std::size_t known = fs->packets.size();
  for (const auto& range : nack.ranges) {
    if (range.segment_index == 0 || range.segment_index > known) continue;
    const auto& seg = fs->packets[range.segment_index - 1];
    const std::size_t last = std::min<std::size_t>(range.last_seq, seg.size());
    for (std::size_t q = range.first_seq; q <= last; ++q) {
      queue_retx(*fs, range.segment_index, static_cast<std::uint16_t>(q));
    }
  }
  if (nack.tail() && !nack.ranges.empty()) {
    for (std::size_t s = nack.ranges.back().segment_index + 1; s <= known; ++s) {
      for (std::size_t q = 1; q <= fs->packets[s - 1].size(); ++q) {
        queue_retx(*fs, static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(q));
      }
    }
  }
  return retx_queue_.size() - before;
}

void SenderEndpoint::on_control(const ControlPacket& control, Nanos now) {
  switch (control.packet_type) {
    case PacketType::nack:
      ++stats_.nacks_received;
      retransmit(control, now);
      break;
    case PacketType::frame_ack:
      ++stats_.acks_received;
      if (FrameState* fs = find(control.frame_id)) {
        fs->acked = true;
        fs->armed = false;
      }
      break;
    default:
      break;
  }
}

std::optional<Nanos> SenderEndpoint::next_timer() const {
  std::optional<Nanos> best;
  for (const auto& fs : retained_) {
    if (fs.armed && !fs.acked && (!best || fs.ack_deadline < *best)) best = fs.ack_deadline;
  }
  return best;
}

void SenderEndpoint::on_timer(Nanos now) {
  for (auto& fs : retained_) {
    if (!fs.armed || fs.acked || now < fs.ack_deadline) continue;
    if (config_.max_tail_probes != 0 && fs.probes >= config_.max_tail_probes) {
      fs.armed = false;
      continue;
    }
    const auto seg = static_cast<std::uint16_t>(fs.packets.size());
    const auto seq = static_cast<std::uint16_t>(fs.packets.back().size());
    queue_retx(fs, seg, seq);
    ++fs.probes;
    ++stats_.tail_probes;
    fs.ack_deadline = now + config_.ack_timeout;
  }
}

const SendLogEntry* SenderEndpoint::log(std::uint32_t frame_id) const {
  auto it = log_.find(frame_id);
  return it == log_.end() ? nullptr : &it->second;
}

bool SenderEndpoint::acked(std::uint32_t frame_id) const {
  const FrameState* fs = find(frame_id);
  return fs != nullptr && fs->acked;
}

SendLogEntry send_frame(SenderEndpoint& sender, const VolumetricFrame& frame, Nanos now,
                        const std::function<bool(const Emission&)>& sink) {
  sender.enqueue_frame(frame, now);
  Nanos t = now;
  while (auto at = sender.next_emission_time(t)) {
    t = *at;
    auto emission = sender.emit(t);
    if (!sink(*emission)) throw TransportError("emission channel closed");
  }
  return *sender.log(frame.frame_id);
}

}  // namespace vlab
