#include "vlab/relay.hpp"

#include <algorithm>

namespace vlab {

ForwardPolicy parse_forward_policy(const std::string& text) {
  if (text == "cut-through" || text == "cut_through") return ForwardPolicy::cut_through;
  if (text == "store-and-forward" || text == "store_and_forward") return ForwardPolicy::store_and_forward;
  throw ConfigError("unknown forwarding policy '" + text + "' (cut-through | store-and-forward)");
}

std::string to_string(ForwardPolicy policy) {
  return policy == ForwardPolicy::cut_through ? "cut-through" : "store-and-forward";
}

std::vector<std::string> StallModel::check() const {
  std::vector<std::string> out;
  if (!(probability >= 0.0 && probability <= 1.0)) out.emplace_back("probability must be in [0,1]");
  if (duration.lo < Nanos(0) || duration.hi < duration.lo) {
    out.emplace_back("duration must be non-negative with lo <= hi");
  }
  return out;
}

std::optional<Nanos> DistributionEntry::distribution_time(std::size_t receiver) const {
  if (!upstream_complete_ts || receiver >= forward_end_ts.size() || !forward_end_ts[receiver]) {
    return std::nullopt;
  }
  return *forward_end_ts[receiver] - *upstream_complete_ts;
}

namespace {

ReceiverConfig upstream_config(ReceiverConfig cfg) {
  cfg.release_segments = true;
  cfg.assemble_frames = false;
  return cfg;
}

}  // namespace

RelayNode::RelayNode(RelayConfig config)
    : config_(std::move(config)),
      upstream_(upstream_config(config_.upstream)),
      stall_decision_(config_.seed, "relay/stall"),
      stall_duration_(config_.seed, "relay/stall-duration") {
  if (config_.downstream.empty()) throw ConfigError("relay needs at least one downstream receiver");
  if (config_.segment_processing < Nanos(0)) throw ConfigError("segment_processing must be >= 0");
  inject_stall(config_.stall);
  downstream_.reserve(config_.downstream.size());
  for (const auto& cfg : config_.downstream) downstream_.emplace_back(cfg);
}

void RelayNode::inject_stall(const StallModel& stall) {
  if (auto problems = stall.check(); !problems.empty()) throw ConfigError("stall " + problems.front());
  config_.stall = stall;
}

DistributionEntry& RelayNode::entry(std::uint32_t frame_id) {
  auto [it, inserted] = log_.try_emplace(frame_id);
  if (inserted) {
    it->second.frame_id = frame_id;
    it->second.forward_start_ts.resize(downstream_.size());
    it->second.forward_end_ts.resize(downstream_.size());
  }
  return it->second;
}

Nanos RelayNode::stall_for(std::uint32_t frame_id) {
  if (auto it = stall_by_frame_.find(frame_id); it != stall_by_frame_.end()) return it->second;
  Nanos stall{0};
  if (stall_decision_.bernoulli(config_.stall.probability)) {
    stall = config_.stall.duration.sample(stall_duration_);
    ++stats_.frames_stalled;
  }
  if (stall_by_frame_.size() > 4096) stall_by_frame_.erase(stall_by_frame_.begin());
  stall_by_frame_.emplace(frame_id, stall);
  entry(frame_id).stall = stall;
  return stall;
}

void RelayNode::forward(const Segment& segment, Nanos now) {
  const Nanos ready = std::max(now + config_.segment_processing + stall_for(segment.frame_id), last_ready_);
  last_ready_ = ready;
  pending_.push_back(Pending{ready, segment});
}

void RelayNode::release(Nanos now) {
  while (!pending_.empty() && pending_.front().ready <= now) {
    const Segment segment = std::move(pending_.front().segment);
    pending_.pop_front();
    for (auto& sender : downstream_) {
      sender.enqueue_segment(segment, now);
      if (sender.queued_packets() > config_.queue_high_water) ++stats_.backpressure_events;
    }
    ++stats_.segments_forwarded;
  }
}

void RelayNode::absorb(RxEvent&& ev, Nanos now, RelayEvent& out) {
  for (auto& c : ev.control) out.upstream_control.push_back(std::move(c));
  for (auto& segment : ev.segments) {
    if (config_.policy == ForwardPolicy::cut_through) {
      forward(segment, now);
    } else {
      held_[segment.frame_id].push_back(std::move(segment));
    }
  }
  if (ev.kind == RxEventKind::frame_complete && ev.frame) {
    const auto fid = ev.frame->frame_id;
    entry(fid).upstream_complete_ts = now;
    if (config_.policy == ForwardPolicy::store_and_forward) {
      auto node = held_.extract(fid);
      if (!node.empty()) {
        for (const auto& segment : node.mapped()) forward(segment, now);
      }
    }
    out.completed = std::move(ev.frame);
  }
  release(now);
}

RelayEvent RelayNode::on_packet(const DataPacket& packet, Nanos now) {
  RelayEvent out;
  absorb(upstream_.on_packet(packet, now), now, out);
  return out;
}

std::optional<Nanos> RelayNode::next_timer() const {
  std::optional<Nanos> best = upstream_.next_timer();
  if (!pending_.empty() && (!best || pending_.front().ready < *best)) best = pending_.front().ready;
  return best;
}

RelayEvent RelayNode::on_timer(Nanos now, std::vector<std::uint32_t>* dropped) {
  RelayEvent out;
  std::vector<std::uint32_t> lost;
  for (auto& c : upstream_.on_timer(now, &lost)) out.upstream_control.push_back(std::move(c));
  for (auto fid : lost) held_.erase(fid);
  if (dropped) dropped->insert(dropped->end(), lost.begin(), lost.end());
  release(now);
  return out;
}

std::optional<Nanos> RelayNode::next_emission_time(std::size_t receiver, Nanos now) const {
  return downstream_.at(receiver).next_emission_time(now);
}

std::optional<Emission> RelayNode::emit(std::size_t receiver, Nanos now) {
  auto emission = downstream_.at(receiver).emit(now);
  if (emission && !emission->packet.retransmit()) {
    auto& e = entry(emission->packet.header.frame_id);
    if (!e.forward_start_ts[receiver]) e.forward_start_ts[receiver] = emission->start;
    e.forward_end_ts[receiver] = emission->end;
  }
  return emission;
}

void RelayNode::on_downstream_control(std::size_t receiver, const ControlPacket& control, Nanos now) {
  downstream_.at(receiver).on_control(control, now);
}

std::optional<Nanos> RelayNode::next_downstream_timer(std::size_t receiver) const {
  return downstream_.at(receiver).next_timer();
}

void RelayNode::on_downstream_timer(std::size_t receiver, Nanos now) {
  downstream_.at(receiver).on_timer(now);
}

const DistributionEntry* RelayNode::distribution(std::uint32_t frame_id) const {
  auto it = log_.find(frame_id);
  return it == log_.end() ? nullptr : &it->second;
}

}  // namespace vlab
