#include "vlab/loopback.hpp"

#include <array>
#include <deque>
#include <map>
#include <set>

#include "vlab/app_emu.hpp"

namespace vlab {
namespace {

class Loopback {
 public:
  explicit Loopback(const LoopbackConfig& cfg)
      : cfg_(cfg),
        sender_(cfg.sender),
        receiver_(cfg.receiver),
        forward_("loopback", cfg.link, cfg.seed),
        back_("loopback-back", cfg.link, cfg.seed) {}

  LoopbackResult run() {
    cadence_.fps = cfg_.fps;
    if (cfg_.frames > 0) schedule_frame(0);
    const Nanos horizon = cadence_.tick_time(cfg_.frames) + Nanos(60'000'000'000);
    q_.run(horizon);

    LoopbackResult r;
    r.horizon_reached = q_.pending() > 0;
    r.sender = sender_.stats();
    r.receiver = receiver_.stats();
    r.forward = forward_.counters();
    r.back = back_.counters();
    r.forced_drops = forced_drops_;
    for (std::uint64_t k = 0; k < cfg_.frames; ++k) {
      LoopbackFrame f;
      f.frame_id = static_cast<std::uint32_t>(k + 1);
      if (const auto* rx = receiver_.log(f.frame_id)) {
        f.completed = rx->completed;
        if (rx->completed) f.frame_rx = rx->protocol_rx();
        f.nacks = rx->nack_count;
      }
      if (const auto* tx = sender_.log(f.frame_id)) {
        f.retransmits = tx->retransmit_count;
        f.protocol_tx = tx->protocol_tx();
      }
      f.intact = intact_.count(f.frame_id) != 0;
      r.frames.push_back(f);
    }
    return r;
  }

 private:
  void schedule_frame(std::uint64_t k) {
    q_.schedule(cadence_.tick_time(k), [this, k] {
      if (k + 1 < cfg_.frames) schedule_frame(k + 1);
      const auto fid = static_cast<std::uint32_t>(k + 1);
      const std::uint64_t slot = k % std::max<std::uint64_t>(cfg_.payload_pool, 1);
      if (!pool_.count(slot)) pool_[slot] = make_synthetic_frame(fid, cfg_.sections, cfg_.seed).payload;
      VolumetricFrame frame{fid, cfg_.sections, pool_[slot]};
      sent_.emplace_back(fid, frame.payload);
      while (sent_.size() > 8) sent_.pop_front();
      sender_.enqueue_frame(frame, q_.now());
      pump();
    });
  }

  struct Wake {
    std::uint64_t gen = 0;
    std::optional<Nanos> at;
  };

  enum WakeKind : std::uint64_t { kPump = 0, kSenderTimer = 1, kReceiverTimer = 2 };

  void arm(WakeKind kind, std::optional<Nanos> next) {
    if (!next) return;
    Wake& w = wakes_[kind];
    const Nanos at = std::max(*next, q_.now());
    if (w.at && *w.at <= at) return;
    w.at = at;
    const std::uint64_t tag = (++w.gen << 2) | kind;
    q_.schedule(at, [this, tag] { fire(tag); });
  }

  void fire(std::uint64_t tag) {
    Wake& w = wakes_[tag & 3];
    if (w.gen != tag >> 2) return;
    w.at.reset();
    switch (tag & 3) {
      case kPump:
        emit();
        break;
      case kSenderTimer:
        sender_timer();
        break;
      default:
        receiver_timer();
        break;
    }
  }

  void pump() {
    arm(kPump, sender_.next_emission_time(q_.now()));
    arm(kSenderTimer, sender_.next_timer());
  }

  void emit() {
    const auto due = sender_.next_emission_time(q_.now());
    if (due && *due <= q_.now()) {
      auto e = sender_.emit(q_.now());
      const bool forced = cfg_.drop && cfg_.drop(e->packet);
      if (forced) {
        ++forced_drops_;
      } else {
        const PacketDelay d =
            forward_.transmit(q_.now(), e->packet.payload.size() + cfg_.sender.overhead_bytes, node_, node_);
        if (!d.lost) {
          std::uint32_t slot;
          if (free_flight_.empty()) {
            slot = static_cast<std::uint32_t>(flight_.size());
            flight_.push_back(std::move(e->packet));
          } else {
            slot = free_flight_.back();
            free_flight_.pop_back();
            flight_[slot] = std::move(e->packet);
          }
          q_.schedule(q_.now() + d.stages.total(), [this, slot] {
            const DataPacket p = std::move(flight_[slot]);
            flight_[slot] = DataPacket{};
            free_flight_.push_back(slot);
            deliver(p);
          });
        }
      }
    }
    pump();
  }

  void sender_timer() {
    sender_.on_timer(q_.now());
    pump();
  }

  void deliver(const DataPacket& p) {
    RxEvent ev = receiver_.on_packet(p, q_.now());
    if (ev.kind == RxEventKind::frame_complete && ev.frame) {
      for (const auto& [id, bytes] : sent_) {
        if (id == ev.frame->frame_id && bytes == ev.frame->payload) intact_.insert(id);
      }
    }
    send_back(ev.control);
    arm(kReceiverTimer, receiver_.next_timer());
  }

  void receiver_timer() {
    auto controls = receiver_.on_timer(q_.now());
    send_back(controls);
    arm(kReceiverTimer, receiver_.next_timer());
  }

  void send_back(std::vector<ControlPacket>& controls) {
    for (auto& c : controls) {
      const PacketDelay d = back_.transmit(q_.now(), encode_packet(c).size(), node_, node_);
      if (d.lost) continue;
      q_.schedule(q_.now() + d.stages.total(), [this, c = std::move(c)] {
        sender_.on_control(c, q_.now());
        pump();
      });
    }
  }

  const LoopbackConfig& cfg_;
  EventQueue q_;
  SenderEndpoint sender_;
  ReceiverEndpoint receiver_;
  Link forward_;
  Link back_;
  NodeStageModel node_;
  CaptureProfile cadence_;
  std::array<Wake, 3> wakes_{};
  std::vector<DataPacket> flight_;
  std::vector<std::uint32_t> free_flight_;
  std::deque<std::pair<std::uint32_t, SharedBytes>> sent_;
  std::set<std::uint32_t> intact_;
  std::map<std::uint64_t, SharedBytes> pool_;
  std::uint64_t forced_drops_ = 0;
};

}  // namespace

LoopbackResult run_loopback(const LoopbackConfig& config) { return Loopback(config).run(); }

}  // namespace vlab
