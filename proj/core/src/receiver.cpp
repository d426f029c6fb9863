#include <algorithm>

#include "vlab/transport.hpp"

namespace vlab {
namespace {

std::uint16_t seg_of(std::uint32_t k) { return static_cast<std::uint16_t>(k >> 16); }
std::uint16_t seq_of(std::uint32_t k) { return static_cast<std::uint16_t>(k & 0xFFFF); }

SharedBytes concat(const std::vector<SharedBytes>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  ByteVector out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.data(), p.data() + p.size());
  return SharedBytes(std::move(out));
}

// Appends `seq` of `seg` to the range list, merging with the previous range
// when contiguous.
void append_range(std::vector<NackRange>& ranges, std::uint16_t seg, std::uint16_t first, std::uint16_t last) {
  if (!ranges.empty()) {
    auto& back = ranges.back();
    if (back.segment_index == seg && back.last_seq != kSeqToEnd && back.last_seq + 1 == first) {
      back.last_seq = last;
      return;
    }
  }
  ranges.push_back({seg, first, last});
}

}  // namespace

ReceiverEndpoint::ReceiverEndpoint(ReceiverConfig config) : config_(config) {}

ControlPacket ReceiverEndpoint::ack(std::uint32_t frame_id) const {
  ControlPacket c;
  c.packet_type = PacketType::frame_ack;
  c.stream_id = config_.stream_id;
  c.frame_id = frame_id;
  return c;
}

RxEvent ReceiverEndpoint::on_packet(const DataPacket& packet, Nanos now) {
  RxEvent ev;
  ++stats_.packets_received;
  const auto& h = packet.header;
  const std::uint32_t fid = h.frame_id;

  if (completed_ids_.count(fid) != 0) {
    ++stats_.duplicates;
    ++log_[fid].duplicates;
    ev.kind = RxEventKind::duplicate;
    ev.control.push_back(ack(fid));  // the earlier ack may have been lost
    return ev;
  }
  if (dropped_ids_.count(fid) != 0) {
    ++stats_.late_packets;
    ev.kind = RxEventKind::late;
    return ev;
  }

  auto [it, inserted] = active_.try_emplace(fid);
  RxFrame& f = it->second;
  ReceiveLogEntry& lg = log_[fid];
  if (inserted) {
    f.first_seen = now;
    lg.frame_id = fid;
    lg.first_packet_recv_ts = now;
    lg.embedded_send_ts_of_first_packet = Nanos(static_cast<std::int64_t>(h.send_timestamp));
  }

  const std::uint16_t seg = h.segment_index;
  const std::uint16_t seq = h.packet_seq;
  if (f.last_segment != 0 && seg > f.last_segment) {
    throw TransportError("frame " + std::to_string(fid) + ": segment " + std::to_string(seg) +
                         " beyond final segment " + std::to_string(f.last_segment));
  }
  if (seg > f.segments.size()) f.segments.resize(seg);
  SegmentSlot& slot = f.segments[seg - 1];
  if (slot.packets == 0) {
    slot.packets = h.packets_in_segment;
    slot.payloads.resize(slot.packets);
  } else if (slot.packets != h.packets_in_segment) {
    throw TransportError("frame " + std::to_string(fid) + ": inconsistent packets_in_segment in segment " +
                         std::to_string(seg));
  }
  if (!slot.payloads[seq - 1].empty()) {
    ++stats_.duplicates;
    ++lg.duplicates;
    ev.kind = RxEventKind::duplicate;
    return ev;
  }

  slot.payloads[seq - 1] = packet.payload;
  ++slot.received;
  ++lg.packets_received;
  if (packet.last_segment()) {
    slot.last = true;
    if (f.last_segment == 0) {
      f.last_segment = seg;
    } else if (f.last_segment != seg) {
      throw TransportError("frame " + std::to_string(fid) + ": conflicting final segment");
    }
  }
  f.last_arrival = now;
  note_holes(f, seg, seq, now);
  if (slot.complete()) ++f.complete_segments;
  if (config_.release_segments) release_ready(fid, f, ev);

  if (f.last_segment != 0 && f.complete_segments == f.last_segment) {
    lg.last_packet_recv_ts = now;
    lg.completed = true;
    ++stats_.frames_completed;
    ev.kind = RxEventKind::frame_complete;
    ev.frame = config_.assemble_frames ? assemble(fid, f) : CompletedFrame{fid, f.last_segment, {}};
    ev.control.push_back(ack(fid));
    active_.erase(it);
    completed_ids_.insert(fid);
    remember_finished(fid);
    return ev;
  }

  if (auto nack = maybe_nack(fid, f, now)) {
    ev.kind = RxEventKind::nack_emitted;
    ev.control.push_back(std::move(*nack));
  }
  return ev;
}

void ReceiverEndpoint::note_holes(RxFrame& f, std::uint16_t seg, std::uint16_t seq, Nanos now) {
  const Key k = key(seg, seq);
  f.holes.erase(k);

  // A whole-segment hole turns into per-packet holes once its size is known.
  if (auto w = f.holes.find(key(seg, 0)); w != f.holes.end()) {
    const Hole hole = w->second;
    f.holes.erase(w);
    const auto& slot = f.segments[seg - 1];
    for (std::uint16_t q = 1; q <= slot.packets; ++q) {
      if (slot.payloads[q - 1].empty()) f.holes.emplace(key(seg, q), hole);
    }
  }

  if (k <= f.highest) return;

  bool added = false;
  auto add = [&](std::uint16_t s, std::uint16_t q) {
    f.holes.emplace(key(s, q), Hole{now, std::nullopt});
    added = true;
  };
  const std::uint16_t hs = f.highest == 0 ? 1 : seg_of(f.highest);
  const std::uint16_t hq = f.highest == 0 ? 0 : seq_of(f.highest);
  if (seg == hs) {
    for (std::uint32_t q = hq + 1; q < seq; ++q) add(seg, static_cast<std::uint16_t>(q));
  } else {
    const auto& hslot = f.segments[hs - 1];
    if (hslot.packets == 0) {
      add(hs, 0);
    } else {
      for (std::uint32_t q = hq + 1; q <= hslot.packets; ++q) add(hs, static_cast<std::uint16_t>(q));
    }
    for (std::uint32_t s = hs + 1; s < seg; ++s) add(static_cast<std::uint16_t>(s), 0);
    for (std::uint32_t q = 1; q < seq; ++q) add(seg, static_cast<std::uint16_t>(q));
  }
  f.highest = k;
  if (added) f.hole_hint = std::min(f.hole_hint, now + config_.nack_delay);
}

bool ReceiverEndpoint::tail_missing(const RxFrame& f) const {
  if (f.last_segment == 0) return true;
  const auto& slot = f.segments[f.last_segment - 1];
  return slot.packets == 0 || f.highest != key(f.last_segment, slot.packets);
}

std::optional<NackRange> ReceiverEndpoint::tail_range(const RxFrame& f) const {
  if (!tail_missing(f) || f.highest == 0) return std::nullopt;
  const std::uint16_t hs = seg_of(f.highest);
  const std::uint16_t hq = seq_of(f.highest);
  const auto& slot = f.segments[hs - 1];
  if (hq < slot.packets) return NackRange{hs, static_cast<std::uint16_t>(hq + 1), slot.packets};
  if (hs == 0xFFFF) return std::nullopt;
  return NackRange{static_cast<std::uint16_t>(hs + 1), 1, kSeqToEnd};
}

std::vector<NackRange> ReceiverEndpoint::detect_gaps(std::uint32_t frame_id) const {
  std::vector<NackRange> ranges;
  auto it = active_.find(frame_id);
  if (it == active_.end()) return ranges;
  const RxFrame& f = it->second;
  for (const auto& [k, hole] : f.holes) {
    if (seq_of(k) == 0) {
      append_range(ranges, seg_of(k), 1, kSeqToEnd);
    } else {
      append_range(ranges, seg_of(k), seq_of(k), seq_of(k));
    }
  }
  if (auto tail = tail_range(f)) append_range(ranges, tail->segment_index, tail->first_seq, tail->last_seq);
  return ranges;
}

std::optional<ControlPacket> ReceiverEndpoint::maybe_nack(std::uint32_t frame_id, RxFrame& f, Nanos now) {
  if (config_.max_nack_rounds != 0 && f.rounds >= config_.max_nack_rounds) return std::nullopt;

  std::vector<Key> due;
  if (!f.holes.empty() && f.hole_hint <= now) {
    for (const auto& [k, hole] : f.holes) {
      const Nanos due_at = hole.requested ? *hole.requested + config_.nack_retry : hole.detected + config_.nack_delay;
      if (due_at <= now) due.push_back(k);
    }
  }
  const bool tail_due = tail_missing(f) && now - f.last_arrival >= config_.tail_timeout &&
                        (!f.last_tail_nack || now - *f.last_tail_nack >= config_.tail_timeout);
  if (due.empty() && !tail_due) {
    if (!f.holes.empty() && f.hole_hint <= now) {
      Nanos hint = Nanos::max();
      for (const auto& [k, hole] : f.holes) {
        hint = std::min(hint, hole.requested ? *hole.requested + config_.nack_retry
                                             : hole.detected + config_.nack_delay);
      }
      f.hole_hint = hint;
    }
    return std::nullopt;
  }

  ControlPacket nack;
  nack.packet_type = PacketType::nack;
  nack.stream_id = config_.stream_id;
  nack.frame_id = frame_id;
  nack.send_timestamp = static_cast<std::uint64_t>(now.count());
  for (Key k : due) {
    Hole& hole = f.holes[k];
    hole.requested = now;
    f.rounds = std::max(f.rounds, ++hole.requests);
    if (seq_of(k) == 0) {
      append_range(nack.ranges, seg_of(k), 1, kSeqToEnd);
    } else {
      append_range(nack.ranges, seg_of(k), seq_of(k), seq_of(k));
    }
  }
  if (tail_due) {
    if (auto tail = tail_range(f)) {
      append_range(nack.ranges, tail->segment_index, tail->first_seq, tail->last_seq);
      if (f.last_segment == 0 || tail->segment_index < f.last_segment || tail->last_seq == kSeqToEnd) {
        nack.flags |= flags::kTail;
      }
    }
    f.last_tail_nack = now;
    f.rounds = std::max(f.rounds, ++f.tail_requests);
  }

  Nanos hint = Nanos::max();
  for (const auto& [k, hole] : f.holes) {
    hint = std::min(hint, hole.requested ? *hole.requested + config_.nack_retry
                                         : hole.detected + config_.nack_delay);
  }
  f.hole_hint = hint;

  if (nack.ranges.empty()) return std::nullopt;
  f.last_nack = now;
  ++log_[frame_id].nack_count;
  ++stats_.nacks_sent;
  return nack;
}

std::optional<Nanos> ReceiverEndpoint::frame_timer(const RxFrame& f) const {
  std::optional<Nanos> best;
  auto consider = [&](Nanos t) {
    if (!best || t < *best) best = t;
  };
  if (config_.frame_deadline.count() > 0) consider(f.first_seen + config_.frame_deadline);
  const bool exhausted = config_.max_nack_rounds != 0 && f.rounds >= config_.max_nack_rounds;
  if (exhausted) {
    if (f.last_nack) consider(*f.last_nack + config_.tail_timeout);
    return best;
  }
  if (!f.holes.empty()) consider(f.hole_hint);
  if (tail_missing(f)) {
    Nanos t = f.last_arrival + config_.tail_timeout;
    if (f.last_tail_nack) t = std::max(t, *f.last_tail_nack + config_.tail_timeout);
    consider(t);
  }
  return best;
}

std::optional<Nanos> ReceiverEndpoint::next_timer() const {
  std::optional<Nanos> best;
  for (const auto& [fid, f] : active_) {
    if (auto t = frame_timer(f); t && (!best || *t < *best)) best = t;
  }
  return best;
}

std::vector<ControlPacket> ReceiverEndpoint::on_timer(Nanos now, std::vector<std::uint32_t>* dropped) {
  std::vector<ControlPacket> out;
  for (auto it = active_.begin(); it != active_.end();) {
    const std::uint32_t fid = it->first;
    RxFrame& f = it->second;
    ++it;
    if (config_.frame_deadline.count() > 0 && now >= f.first_seen + config_.frame_deadline) {
      drop(fid, true);
      if (dropped) dropped->push_back(fid);
      continue;
    }
    const bool exhausted = config_.max_nack_rounds != 0 && f.rounds >= config_.max_nack_rounds;
    if (exhausted && f.last_nack && now >= *f.last_nack + config_.tail_timeout) {
      drop(fid, false);
      if (dropped) dropped->push_back(fid);
      continue;
    }
    if (auto nack = maybe_nack(fid, f, now)) out.push_back(std::move(*nack));
  }
  return out;
}

void ReceiverEndpoint::drop(std::uint32_t frame_id, bool expired) {
  active_.erase(frame_id);
  log_[frame_id].dropped = true;
  dropped_ids_.insert(frame_id);
  remember_finished(frame_id);
  if (expired) {
    ++stats_.frames_expired;
  } else {
    ++stats_.frames_abandoned;
  }
}

void ReceiverEndpoint::remember_finished(std::uint32_t) {
  constexpr std::size_t kMemory = 4096;
  while (completed_ids_.size() > kMemory) completed_ids_.erase(completed_ids_.begin());
  while (dropped_ids_.size() > kMemory) dropped_ids_.erase(dropped_ids_.begin());
}

void ReceiverEndpoint::release_ready(std::uint32_t frame_id, RxFrame& f, RxEvent& ev) {
  while (f.released < f.segments.size() && f.segments[f.released].complete()) {
    auto& slot = f.segments[f.released];
    const auto index = static_cast<std::uint16_t>(f.released + 1);
    SharedBytes joined = slot.payloads.size() == 1 ? slot.payloads.front() : concat(slot.payloads);
    slot.joined = joined;
    ev.segments.push_back(Segment{frame_id, index, slot.last ? index : std::uint16_t{0}, std::move(joined)});
    ++f.released;
  }
}

CompletedFrame ReceiverEndpoint::assemble(std::uint32_t frame_id, const RxFrame& f) const {
  std::vector<SharedBytes> parts;
  for (const auto& slot : f.segments) {
    if (!slot.joined.empty()) {
      parts.push_back(slot.joined);
    } else {
      parts.insert(parts.end(), slot.payloads.begin(), slot.payloads.end());
    }
  }
  return CompletedFrame{frame_id, f.last_segment, concat(parts)};
}

const ReceiveLogEntry* ReceiverEndpoint::log(std::uint32_t frame_id) const {
  auto it = log_.find(frame_id);
  return it == log_.end() ? nullptr : &it->second;
}

}  // namespace vlab
