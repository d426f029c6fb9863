#include "vlab/netem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vlab {

void EventQueue::schedule(Nanos at, Action action) {
  if (at < now_) {
    throw std::logic_error("EventQueue: event at " + std::to_string(at.count()) + " ns is before now (" +
                           std::to_string(now_.count()) + " ns)");
  }
  std::uint32_t slot;
  if (free_slots_.empty()) {
    slot = static_cast<std::uint32_t>(actions_.size());
    actions_.push_back(std::move(action));
  } else {
    slot = free_slots_.back();
    free_slots_.pop_back();
    actions_[slot] = std::move(action);
  }
  heap_.push_back(Entry{at, next_sequence_++, slot});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

std::optional<FiredEvent> EventQueue::step() {
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  const Entry e = heap_.back();
  heap_.pop_back();
  now_ = e.at;
  ++fired_;
  Action action = std::move(actions_[e.slot]);
  actions_[e.slot] = nullptr;
  free_slots_.push_back(e.slot);
  action();
  return FiredEvent{e.at, e.sequence};
}

void EventQueue::run(std::optional<Nanos> horizon) {
  while (!heap_.empty()) {
    if (horizon && heap_.front().at > *horizon) break;
    step();
  }
}

Nanos LinkModel::propagation() const {
  return Nanos(std::llround(distance_km * static_cast<double>(propagation_per_km.count())));
}

std::vector<std::string> LinkModel::check() const {
  std::vector<std::string> out;
  if (bandwidth_bps == 0) out.emplace_back("bandwidth_bps must be > 0");
  if (!(distance_km >= 0.0)) out.emplace_back("distance_km must be >= 0");
  if (propagation_per_km.count() < 0) out.emplace_back("propagation_per_km must be >= 0");
  if (switching_min.count() < 0) out.emplace_back("switching_min must be >= 0");
  if (switching_max < switching_min) out.emplace_back("switching_max must be >= switching_min");
  if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) out.emplace_back("loss_rate must be in [0,1]");
  if (!(reorder_rate >= 0.0 && reorder_rate <= 1.0)) out.emplace_back("reorder_rate must be in [0,1]");
  if (reorder_delay.count() < 0) out.emplace_back("reorder_delay must be >= 0");
  return out;
}

Nanos NodeStageModel::effective_rx_sw() const {
  if (load_factor == 1.0) return rx_sw;
  return Nanos(std::llround(static_cast<double>(rx_sw.count()) * load_factor));
}

Nanos NodeStageModel::effective_rx_hw() const {
  if (load_factor == 1.0) return rx_hw;
  return Nanos(std::llround(static_cast<double>(rx_hw.count()) * load_factor));
}

std::vector<std::string> NodeStageModel::check() const {
  std::vector<std::string> out;
  if (tx_sw.count() < 0) out.emplace_back("tx_sw must be >= 0");
  if (tx_hw.count() < 0) out.emplace_back("tx_hw must be >= 0");
  if (rx_sw.count() < 0) out.emplace_back("rx_sw must be >= 0");
  if (rx_hw.count() < 0) out.emplace_back("rx_hw must be >= 0");
  if (!(load_factor >= 0.0)) out.emplace_back("load_factor must be >= 0");
  return out;
}

namespace {

StageBreakdown fixed_stages(const LinkModel& link, const NodeStageModel& tx, const NodeStageModel& rx,
                            Nanos serialization, LinkStreams& streams) {
  StageBreakdown s;
  s.tx_sw = tx.tx_sw;
  s.tx_hw = tx.tx_hw;
  s.serialization = serialization;
  s.propagation = link.propagation();
  for (std::uint32_t h = 0; h < link.hops; ++h) {
    s.switching += Nanos(streams.switching.uniform_int(link.switching_min.count(), link.switching_max.count()));
  }
  if (link.reorder_rate > 0.0 && streams.reorder.bernoulli(link.reorder_rate)) s.reorder = link.reorder_delay;
  s.rx_hw = rx.effective_rx_hw();
  s.rx_sw = rx.effective_rx_sw();
  return s;
}

}  // namespace

PacketDelay packet_delay(const LinkModel& link, const NodeStageModel& node_tx, const NodeStageModel& node_rx,
                         std::size_t packet_bytes, LinkStreams& streams) {
  PacketDelay d;
  if (link.loss_rate > 0.0 && streams.loss.bernoulli(link.loss_rate)) {
    d.lost = true;
    return d;
  }
  d.stages = fixed_stages(link, node_tx, node_rx,
                          serialization_time(static_cast<std::uint64_t>(packet_bytes) * 8, link.bandwidth_bps), streams);
  return d;
}

Link::Link(std::string name, LinkModel model, std::uint64_t seed)
    : name_(std::move(name)), model_(model), streams_(seed, name_) {}

PacketDelay Link::transmit(Nanos departure, std::size_t wire_bytes, const NodeStageModel& node_tx,
                           const NodeStageModel& node_rx) {
  ++counters_.sent;
  const Nanos ser = serialization_time(static_cast<std::uint64_t>(wire_bytes) * 8, model_.bandwidth_bps);
  const Nanos on_wire = departure + node_tx.tx_sw + node_tx.tx_hw;
  const Nanos start = std::max(on_wire, busy_until_);
  busy_until_ = start + ser;

  PacketDelay d;
  if (model_.loss_rate > 0.0 && streams_.loss.bernoulli(model_.loss_rate)) {
    d.lost = true;
    ++counters_.lost;
    return d;
  }
  d.stages = fixed_stages(model_, node_tx, node_rx, ser, streams_);
  d.stages.queueing = start - on_wire;
  ++counters_.delivered;
  return d;
}

}  // namespace vlab
