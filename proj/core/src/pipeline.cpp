#include "vlab/pipeline.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "vlab/clocksync.hpp"

namespace vlab {

SenderConfig make_sender_config(const ScenarioConfig& c, std::uint64_t pacing_bps, std::uint32_t overhead) {
  SenderConfig s;
  s.stream_id = kPipelineStreamId;
  s.pacing_rate_bps = pacing_bps;
  s.segment_payload_size = c.transport.segment_payload_size;
  s.packet_payload_size = c.transport.packet_payload_size;
  s.overhead_bytes = overhead;
  s.retention_frames = c.transport.retention_frames;
  s.max_frame_bytes = c.transport.max_frame_bytes;
  s.ack_timeout = c.transport.ack_timeout;
  s.max_tail_probes = c.transport.max_tail_probes;
  return s;
}

ReceiverConfig make_receiver_config(const ScenarioConfig& c) {
  ReceiverConfig r;
  r.stream_id = kPipelineStreamId;
  r.nack_delay = c.transport.nack_delay;
  r.tail_timeout = c.transport.tail_timeout;
  r.nack_retry = c.transport.nack_retry;
  r.max_nack_rounds = c.transport.max_nack_rounds;
  r.frame_deadline = c.transport.frame_deadline;
  return r;
}

RelayConfig make_relay_config(const ScenarioConfig& c) {
  RelayConfig r;
  r.upstream = make_receiver_config(c);
  for (std::uint32_t k = 0; k < c.receivers; ++k) {
    r.downstream.push_back(make_sender_config(c, c.downstream_pacing(k), c.hop2.overhead_bytes));
  }
  r.policy = c.relay_node.policy;
  r.segment_processing = c.relay_node.segment_processing;
  r.stall = c.relay_node.stall;
  r.queue_high_water = c.relay_node.queue_high_water;
  r.seed = c.seed;
  return r;
}

namespace {

constexpr std::size_t kPayloadCacheFrames = 8;

struct Timer {
  std::uint64_t gen = 0;
  std::optional<Nanos> at;
  std::optional<Nanos> last_fired;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, const PacketObserver& observer)
      : cfg_(config),
        observer_(observer),
        frames_(config.frame_count()),
        sender_clock_(ClockRole::slave, config.clock.sender_offset, config.clock.sender_drift_ppm),
        relay_clock_(ClockRole::slave, config.clock.relay_offset, config.clock.relay_drift_ppm),
        capture_(config.capture, config.seed),
        sender_(make_sender_config(config, config.hop1.pacing_bps, config.hop1.overhead_bytes)),
        relay_(make_relay_config(config)),
        hop1_("hop1", config.hop1.link, config.seed),
        hop1_back_("hop1-back", config.hop1.link, config.seed),
        sync_loss_(config.seed, "sync/loss"),
        relay_pump_(config.receivers),
        relay_ack_timer_(config.receivers),
        receiver_timer_(config.receivers) {
    for (std::uint32_t k = 0; k < config.receivers; ++k) {
      if (k == 0) {
        rx_clocks_.push_back(NodeClock::master());
      } else {
        rx_clocks_.emplace_back(ClockRole::slave, config.clock.receiver_offset, config.clock.receiver_drift_ppm);
      }
      receivers_.emplace_back(make_receiver_config(config));
      hop2_.emplace_back("hop2." + std::to_string(k), config.hop2.link, config.seed);
      hop2_back_.emplace_back("hop2." + std::to_string(k) + "-back", config.hop2.link, config.seed);
      render_streams_.emplace_back(config.seed, "app_rx/" + std::to_string(k));
    }
    app_rx_.resize(config.receivers);
    offsets_.resize(config.receivers);
    intact_.resize(config.receivers);
    corrupt_.resize(config.receivers);
  }

  PipelineResult run() {
    const Nanos last_tick = frames_ == 0 ? Nanos(0) : cfg_.capture.tick_time(frames_ - 1);
    if (cfg_.clock.correct) {
      schedule_sync(Nanos(0), last_tick);
    }
    if (frames_ > 0) schedule_capture(0);
    const Nanos horizon = last_tick + Nanos(10'000'000'000);
    q_.run(horizon);

    PipelineResult r;
    r.horizon_reached = q_.pending() > 0;
    r.events = q_.fired();
    r.frames_sent = frames_;
    collect(r);
    return r;
  }

 private:
  // ---- time helpers -------------------------------------------------------

  Nanos local(const NodeClock& clock) const { return clock.local(q_.now()); }

  Nanos true_at(const NodeClock& clock, Nanos local_time) const {
    Nanos t = clock.true_time(local_time);
    while (clock.local(t) < local_time) ++t;
    return std::max(t, q_.now());
  }

  void arm(Timer& timer, const NodeClock& clock, std::optional<Nanos> local_next, std::function<void()> fire) {
    if (!local_next) {
      if (timer.at) {
        timer.at.reset();
        ++timer.gen;
      }
      return;
    }
    Nanos at = true_at(clock, *local_next);
    // A timer that fired at this instant without making progress must not
    // be re-armed for the same instant.
    if (timer.last_fired && *timer.last_fired == at) at += Nanos(1);
    // An earlier wake-up is already pending; it re-arms when it fires.
    if (timer.at && *timer.at <= at) return;
    timer.at = at;
    const auto gen = ++timer.gen;
    q_.schedule(at, [this, &timer, gen, fire = std::move(fire)] {
      if (timer.gen != gen) return;
      timer.at.reset();
      timer.last_fired = q_.now();
      fire();
    });
  }

  ClockOffsets current_offsets(std::size_t receiver) const {
    return {sender_clock_.estimated_offset(), relay_clock_.estimated_offset(),
            rx_clocks_[receiver].estimated_offset()};
  }

  // ---- sync ---------------------------------------------------------------

  void sync_all() {
    const NodeClock& master = rx_clocks_[0];
    sync_exchange(sender_clock_, master, cfg_.clock.path, q_.now(), sync_loss_);
    sync_exchange(relay_clock_, master, cfg_.clock.path, q_.now(), sync_loss_);
    sync_exchanges_ += 2;
    for (std::size_t k = 1; k < rx_clocks_.size(); ++k) {
      sync_exchange(rx_clocks_[k], master, cfg_.clock.path, q_.now(), sync_loss_);
      ++sync_exchanges_;
    }
  }

  // ---- capture side -------------------------------------------------------

  void schedule_sync(Nanos at, Nanos last_tick) {
    q_.schedule(at, [this, at, last_tick] {
      if (at + cfg_.clock.sync_interval <= last_tick) schedule_sync(at + cfg_.clock.sync_interval, last_tick);
      sync_all();
    });
  }

  void schedule_capture(std::uint64_t k) {
    q_.schedule(cfg_.capture.tick_time(k), [this, k] {
      if (k + 1 < frames_) schedule_capture(k + 1);
      capture(static_cast<std::uint32_t>(k + 1));
    });
  }

  void capture(std::uint32_t fid) {
    auto result = capture_.capture_tick(fid, local(sender_clock_));
    app_tx_.push_back(result.record);
    const Nanos ready = true_at(sender_clock_, result.record.capture_end);
    q_.schedule(ready, [this, frame = std::move(result.frame)] {
      payloads_.emplace_back(frame.frame_id, frame.payload);
      while (payloads_.size() > kPayloadCacheFrames) payloads_.pop_front();
      sender_.enqueue_frame(frame, local(sender_clock_));
      arm_sender();
    });
  }

  void arm_sender() {
    arm(sender_pump_, sender_clock_, sender_.next_emission_time(local(sender_clock_)), [this] {
      const Nanos now = local(sender_clock_);
      const auto due = sender_.next_emission_time(now);
      if (due && *due <= now) {
        auto e = sender_.emit(now);
        send_data(*e, hop1_, cfg_.hop1.overhead_bytes, cfg_.sender, cfg_.relay, sender_clock_, relay_clock_,
                  [this](const DataPacket& p) { at_relay(p); });
      }
      arm_sender();
    });
    arm(sender_ack_timer_, sender_clock_, sender_.next_timer(), [this] {
      sender_.on_timer(local(sender_clock_));
      arm_sender();
    });
  }

  // ---- transmission -------------------------------------------------------

  std::shared_ptr<PacketTrace> trace_of(const Link& link, const PacketHeader& h, bool retransmit) const {
    if (!observer_) return nullptr;
    auto t = std::make_shared<PacketTrace>();
    t->link = link.name();
    t->type = h.packet_type;
    t->frame_id = h.frame_id;
    t->segment = h.segment_index;
    t->seq = h.packet_seq;
    t->retransmit = retransmit;
    t->true_send = q_.now();
    t->embedded_send = Nanos(static_cast<std::int64_t>(h.send_timestamp));
    return t;
  }

  template <typename Item, typename Deliver>
  void transmit(Item item, std::size_t wire_bytes, std::shared_ptr<PacketTrace> trace, Link& link,
                const NodeStageModel& tx, const NodeStageModel& rx, const NodeClock& tx_clock,
                const NodeClock& rx_clock, Deliver deliver) {
    const PacketDelay d = link.transmit(q_.now(), wire_bytes, tx, rx);
    if (trace) trace->stages = d.stages;
    if (d.lost) {
      if (trace) {
        trace->lost = true;
        observer_(*trace);
      }
      return;
    }
    const Nanos arrival = q_.now() + d.stages.total();
    q_.schedule(arrival, [this, item = std::move(item), trace = std::move(trace), &tx_clock, &rx_clock,
                          deliver = std::move(deliver)]() mutable {
      if (trace) {
        trace->true_recv = q_.now();
        trace->recv_local = local(rx_clock);
        trace->correction = tx_clock.estimated_offset() - rx_clock.estimated_offset();
        observer_(*trace);
      }
      deliver(item);
    });
  }

  // Data packets travel as decoded objects whose payload views the frame
  // buffer; control packets go through the byte codec.
  template <typename Deliver>
  void send_data(const Emission& e, Link& link, std::uint32_t overhead, const NodeStageModel& tx,
                 const NodeStageModel& rx, const NodeClock& tx_clock, const NodeClock& rx_clock, Deliver deliver) {
    transmit(e.packet, e.packet.payload.size() + overhead, trace_of(link, e.packet.header, e.packet.retransmit()),
             link, tx, rx, tx_clock, rx_clock, std::move(deliver));
  }

  template <typename Deliver>
  void send_control(ControlPacket c, Nanos local_now, Link& link, const NodeStageModel& tx, const NodeStageModel& rx,
                    const NodeClock& tx_clock, const NodeClock& rx_clock, Deliver deliver) {
    c.send_timestamp = static_cast<std::uint64_t>(local_now.count());
    PacketHeader h;
    h.packet_type = c.packet_type;
    h.frame_id = c.frame_id;
    h.send_timestamp = c.send_timestamp;
    ByteVector wire = encode_packet(c);
    const std::size_t size = wire.size();
    transmit(SharedBytes(std::move(wire)), size, trace_of(link, h, false), link, tx, rx, tx_clock, rx_clock,
             [this, deliver = std::move(deliver)](const SharedBytes& bytes) {
               Packet p;
               try {
                 p = decode_packet(bytes);
               } catch (const DecodeError&) {
                 ++malformed_;
                 return;
               }
               if (const auto* control = std::get_if<ControlPacket>(&p)) deliver(*control);
             });
  }

  // ---- relay --------------------------------------------------------------

  void to_sender(std::vector<ControlPacket>& controls) {
    for (auto& c : controls) {
      send_control(std::move(c), local(relay_clock_), hop1_back_, cfg_.relay, cfg_.sender, relay_clock_,
                   sender_clock_, [this](const ControlPacket& cp) {
                     sender_.on_control(cp, local(sender_clock_));
                     arm_sender();
                   });
    }
  }

  void at_relay(const DataPacket& p) {
    RelayEvent ev;
    try {
      ev = relay_.on_packet(p, local(relay_clock_));
    } catch (const TransportError&) {
      ++malformed_;
      return;
    }
    to_sender(ev.upstream_control);
    arm_relay();
  }

  void arm_relay() {
    arm(relay_timer_, relay_clock_, relay_.next_timer(), [this] {
      auto ev = relay_.on_timer(local(relay_clock_));
      to_sender(ev.upstream_control);
      arm_relay();
    });
    for (std::size_t k = 0; k < receivers_.size(); ++k) arm_downstream(k);
  }

  void arm_downstream(std::size_t k) {
    arm(relay_pump_[k], relay_clock_, relay_.next_emission_time(k, local(relay_clock_)), [this, k] {
      const Nanos now = local(relay_clock_);
      const auto due = relay_.next_emission_time(k, now);
      if (due && *due <= now) {
        auto e = relay_.emit(k, now);
        send_data(*e, hop2_[k], cfg_.hop2.overhead_bytes, cfg_.relay, cfg_.receiver, relay_clock_, rx_clocks_[k],
                  [this, k](const DataPacket& p) { at_receiver(k, p); });
      }
      arm_downstream(k);
    });
    arm(relay_ack_timer_[k], relay_clock_, relay_.next_downstream_timer(k), [this, k] {
      relay_.on_downstream_timer(k, local(relay_clock_));
      arm_downstream(k);
    });
  }

  // ---- receivers ----------------------------------------------------------

  void to_relay(std::size_t k, std::vector<ControlPacket>& controls) {
    for (auto& c : controls) {
      send_control(std::move(c), local(rx_clocks_[k]), hop2_back_[k], cfg_.receiver, cfg_.relay, rx_clocks_[k],
                   relay_clock_, [this, k](const ControlPacket& cp) {
                     relay_.on_downstream_control(k, cp, local(relay_clock_));
                     arm_downstream(k);
                   });
    }
  }

  void at_receiver(std::size_t k, const DataPacket& p) {
    const Nanos now = local(rx_clocks_[k]);
    RxEvent ev;
    try {
      ev = receivers_[k].on_packet(p, now);
    } catch (const TransportError&) {
      ++malformed_;
      return;
    }
    offsets_[k].try_emplace(p.header.frame_id, current_offsets(k));
    if (ev.kind == RxEventKind::frame_complete && ev.frame) {
      const auto fid = ev.frame->frame_id;
      if (cfg_.render.busy_work) payload_checksum(ev.frame->payload.span());
      app_rx_[k].emplace(fid, render_complete(cfg_.render, fid, now, render_streams_[k]));
      if (ev.frame->payload == sent_payload(fid)) {
        ++intact_[k];
      } else {
        ++corrupt_[k];
      }
    }
    to_relay(k, ev.control);
    arm_receiver(k);
  }

  void arm_receiver(std::size_t k) {
    arm(receiver_timer_[k], rx_clocks_[k], receivers_[k].next_timer(), [this, k] {
      auto controls = receivers_[k].on_timer(local(rx_clocks_[k]));
      to_relay(k, controls);
      arm_receiver(k);
    });
  }

  SharedBytes sent_payload(std::uint32_t fid) const {
    for (const auto& [id, bytes] : payloads_) {
      if (id == fid) return bytes;
    }
    return make_synthetic_frame(fid, cfg_.capture.sections, cfg_.seed).payload;
  }

  // ---- results ------------------------------------------------------------

  void collect(PipelineResult& r) const {
    r.app_tx = app_tx_;
    r.sender = sender_.stats();
    r.relay = relay_.stats();
    r.relay_upstream = relay_.upstream().stats();
    r.distribution = relay_.distribution_log();
    r.capture_overruns = capture_.overruns();
    r.sync_exchanges = sync_exchanges_;
    r.malformed_packets = malformed_;
    r.final_offsets = current_offsets(0);
    r.links.emplace_back(hop1_.name(), hop1_.counters());
    r.links.emplace_back(hop1_back_.name(), hop1_back_.counters());
    for (std::size_t k = 0; k < receivers_.size(); ++k) {
      r.links.emplace_back(hop2_[k].name(), hop2_[k].counters());
      r.links.emplace_back(hop2_back_[k].name(), hop2_back_[k].counters());
    }

    std::map<std::uint32_t, const AppTxRecord*> app_tx;
    for (const auto& rec : app_tx_) app_tx.emplace(rec.frame_id, &rec);

    for (std::size_t k = 0; k < receivers_.size(); ++k) {
      ReceiverOutcome out;
      out.frames_intact = intact_[k];
      out.frames_corrupt = corrupt_[k];
      out.stats = receivers_[k].stats();
      for (std::uint64_t i = 0; i < frames_; ++i) {
        const auto fid = static_cast<std::uint32_t>(i + 1);
        FrameLogs logs;
        logs.frame_id = fid;
        if (auto it = app_tx.find(fid); it != app_tx.end()) logs.app_tx = it->second;
        logs.origin_send = sender_.log(fid);
        logs.relay_receive = relay_.upstream().log(fid);
        const DistributionEntry* dist = relay_.distribution(fid);
        if (dist && dist->upstream_complete_ts) logs.upstream_complete_ts = &*dist->upstream_complete_ts;
        logs.relay_send = relay_.downstream(k).log(fid);
        logs.final_receive = receivers_[k].log(fid);
        if (auto it = app_rx_[k].find(fid); it != app_rx_[k].end()) logs.app_rx = &it->second;
        if (auto it = offsets_[k].find(fid); it != offsets_[k].end()) {
          logs.offsets = it->second;
        } else {
          logs.offsets = current_offsets(k);
        }

        if (logs.final_receive && logs.final_receive->completed && logs.app_rx) {
          out.records.push_back(assemble_record(logs));
        } else {
          std::uint32_t retx = 0;
          if (logs.origin_send) retx += logs.origin_send->retransmit_count;
          if (logs.relay_send) retx += logs.relay_send->retransmit_count;
          out.records.push_back(dropped_record(fid, retx));
        }
      }
      out.summary = summarize_receiver(r, out, k);
      r.receivers.push_back(std::move(out));
    }
  }

  RunSummary summarize_receiver(const PipelineResult& r, const ReceiverOutcome& out, std::size_t k) const {
    RunSummary s = summarize(out.records);
    auto add = [&s](std::string name, std::uint64_t v) { s.counters.emplace_back(std::move(name), v); };
    for (const auto& [name, counters] : r.links) {
      if (name.rfind("hop2.", 0) == 0 && name.find("hop2." + std::to_string(k)) != 0) continue;
      add(name + "_sent", counters.sent);
      add(name + "_delivered", counters.delivered);
      add(name + "_lost", counters.lost);
    }
    add("sender_first_transmissions", r.sender.packets_first);
    add("sender_retransmissions", r.sender.packets_retransmitted);
    add("sender_tail_probes", r.sender.tail_probes);
    add("sender_stale_nacks", r.sender.stale_nacks);
    const auto& down = relay_.downstream(k).stats();
    add("relay_first_transmissions", down.packets_first);
    add("relay_retransmissions", down.packets_retransmitted);
    add("relay_tail_probes", down.tail_probes);
    add("relay_nacks_sent", r.relay_upstream.nacks_sent);
    add("relay_frames_dropped", r.relay_upstream.frames_expired + r.relay_upstream.frames_abandoned);
    add("relay_stalled_frames", r.relay.frames_stalled);
    add("relay_backpressure_events", r.relay.backpressure_events);
    add("receiver_nacks_sent", out.stats.nacks_sent);
    add("receiver_duplicates", out.stats.duplicates);
    add("receiver_late_packets", out.stats.late_packets);
    add("frames_intact", out.frames_intact);
    add("frames_corrupt", out.frames_corrupt);
    add("capture_overruns", r.capture_overruns);
    add("sync_exchanges", r.sync_exchanges);
    add("malformed_packets", r.malformed_packets);
    return s;
  }

  const ScenarioConfig& cfg_;
  const PacketObserver& observer_;
  std::uint64_t frames_;
  EventQueue q_;

  NodeClock sender_clock_;
  NodeClock relay_clock_;
  std::vector<NodeClock> rx_clocks_;

  CaptureEmulator capture_;
  SenderEndpoint sender_;
  RelayNode relay_;
  std::vector<ReceiverEndpoint> receivers_;

  Link hop1_;
  Link hop1_back_;
  std::vector<Link> hop2_;
  std::vector<Link> hop2_back_;

  SeedStream sync_loss_;
  std::vector<SeedStream> render_streams_;

  Timer sender_pump_;
  Timer sender_ack_timer_;
  Timer relay_timer_;
  std::vector<Timer> relay_pump_;
  std::vector<Timer> relay_ack_timer_;
  std::vector<Timer> receiver_timer_;

  std::vector<AppTxRecord> app_tx_;
  std::vector<std::map<std::uint32_t, AppRxRecord>> app_rx_;
  std::vector<std::map<std::uint32_t, ClockOffsets>> offsets_;
  std::deque<std::pair<std::uint32_t, SharedBytes>> payloads_;
  std::vector<std::uint64_t> intact_;
  std::vector<std::uint64_t> corrupt_;
  std::uint64_t sync_exchanges_ = 0;
  std::uint64_t malformed_ = 0;
};

}  // namespace

PipelineResult run_pipeline(const ScenarioConfig& config, const PacketObserver& observer) {
  if (auto problems = validate(config); !problems.empty()) throw ConfigError(problems.front().message());
  Simulation sim(config, observer);
  return sim.run();
}

std::vector<ReportFiles> write_pipeline_report(const PipelineResult& result, const std::filesystem::path& dir) {
  std::vector<ReportFiles> files;
  for (std::size_t k = 0; k < result.receivers.size(); ++k) {
    const std::string suffix = k == 0 ? "" : "_receiver" + std::to_string(k);
    files.push_back(write_report(result.receivers[k].records, result.receivers[k].summary, dir, suffix));
  }
  return files;
}

TraceWriter::TraceWriter(const std::filesystem::path& path)
    : out_(std::make_shared<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
  if (!*out_) throw Error("cannot write " + path.string());
  *out_ << "time_ns,link,type,frame_id,segment,seq,retransmit,lost,tx_sw_ns,tx_hw_ns,queueing_ns,"
           "serialization_ns,propagation_ns,switching_ns,reorder_ns,rx_hw_ns,rx_sw_ns,total_ns\n";
}

void TraceWriter::operator()(const PacketTrace& t) {
  const auto& s = t.stages;
  *out_ << (t.lost ? t.true_send : t.true_recv).count() << ',' << t.link << ','
        << static_cast<int>(t.type) << ',' << t.frame_id << ',' << t.segment << ',' << t.seq << ','
        << (t.retransmit ? 1 : 0) << ',' << (t.lost ? 1 : 0) << ',' << s.tx_sw.count() << ',' << s.tx_hw.count()
        << ',' << s.queueing.count() << ',' << s.serialization.count() << ',' << s.propagation.count() << ','
        << s.switching.count() << ',' << s.reorder.count() << ',' << s.rx_hw.count() << ',' << s.rx_sw.count()
        << ',' << s.total().count() << '\n';
}

}  // namespace vlab
