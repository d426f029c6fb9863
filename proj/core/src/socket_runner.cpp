#include "vlab/socket_runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "vlab/clocksync.hpp"
#include "vlab/relay.hpp"
#include "vlab/udp.hpp"

namespace vlab {
namespace {

using std::chrono::nanoseconds;

constexpr Nanos kMaxWait{20'000'000};
constexpr Nanos kSyncReplyTimeout{200'000'000};
constexpr int kSyncSamples = 5;

std::int64_t steady_ns() {
  return std::chrono::duration_cast<nanoseconds>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

Nanos seconds(double s) { return Nanos(static_cast<std::int64_t>(s * 1e9)); }

struct RoleContext {
  const ScenarioConfig& cfg;
  std::ostream* progress;
  std::mutex* progress_mutex;

  void note(const std::string& text) const {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(*progress_mutex);
    *progress << text << '\n';
  }
};

std::optional<Packet> decode(const Datagram& d) {
  try {
    return decode_packet(SharedBytes(d.bytes));
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

void send_control(UdpSocket& sock, ControlPacket c, const HostClock& clock, const UdpAddress& to) {
  c.send_timestamp = static_cast<std::uint64_t>(clock.now().count());
  sock.send_to(encode_packet(c), to);
}

// Answers a SYNC_REQ on the master.
bool serve_sync(UdpSocket& sock, const HostClock& clock, const ControlPacket& req, const UdpAddress& from) {
  if (req.packet_type != PacketType::sync_req) return false;
  ControlPacket resp;
  resp.packet_type = PacketType::sync_resp;
  resp.frame_id = req.frame_id;
  resp.sync.t1 = req.sync.t1;
  resp.sync.t2 = static_cast<std::uint64_t>(clock.now().count());
  resp.sync.t3 = static_cast<std::uint64_t>(clock.now().count());
  resp.send_timestamp = resp.sync.t3;
  sock.send_to(encode_packet(resp), from);
  return true;
}

// Two-way exchanges with the master; the sample with the shortest round trip wins.
Nanos sync_with_master(UdpSocket& sock, const HostClock& clock, const UdpAddress& master, Nanos give_up_after,
                       std::uint64_t& exchanges) {
  const std::int64_t deadline = steady_ns() + give_up_after.count();
  std::optional<std::pair<Nanos, Nanos>> best;  // (rtt, offset)
  std::uint32_t seq = 0;
  int got = 0;
  while (got < kSyncSamples) {
    if (steady_ns() > deadline) {
      if (best) break;
      throw SyncFailure("no SYNC_RESP from master " + master.to_string());
    }
    ControlPacket req;
    req.packet_type = PacketType::sync_req;
    req.frame_id = ++seq;
    req.sync.t1 = static_cast<std::uint64_t>(clock.now().count());
    req.send_timestamp = req.sync.t1;
    sock.send_to(encode_packet(req), master);
    const std::int64_t wait_until = steady_ns() + kSyncReplyTimeout.count();
    while (steady_ns() < wait_until) {
      auto d = sock.receive(nanoseconds(wait_until - steady_ns()));
      if (!d) continue;
      const Nanos t4 = clock.now();
      auto p = decode(*d);
      if (!p) continue;
      const auto* c = std::get_if<ControlPacket>(&*p);
      if (!c || c->packet_type != PacketType::sync_resp || c->frame_id != seq) continue;
      SyncTimestamps ts = c->sync;
      ts.t4 = static_cast<std::uint64_t>(t4.count());
      const Nanos rtt = Nanos(static_cast<std::int64_t>(ts.t4 - ts.t1) - static_cast<std::int64_t>(ts.t3 - ts.t2));
      const Nanos off = estimate_offset(ts);
      if (!best || rtt < best->first) best = std::make_pair(rtt, off);
      ++got;
      ++exchanges;
      break;
    }
  }
  return best->second;
}

Nanos min_deadline(std::initializer_list<std::optional<Nanos>> items, Nanos fallback) {
  Nanos out = fallback;
  for (const auto& i : items) {
    if (i) out = std::min(out, *i);
  }
  return out;
}

// Waits for the next datagram, spinning politely when the deadline is close.
std::optional<Datagram> wait_for(UdpSocket& sock, Nanos now, Nanos until) {
  const Nanos wait = std::clamp(until - now, Nanos(0), kMaxWait);
  if (wait < Nanos(1'000'000)) {
    auto d = sock.receive(nanoseconds(0));
    if (!d) std::this_thread::yield();
    return d;
  }
  return sock.receive(nanoseconds(wait.count()) - nanoseconds(500'000));
}

// ---------------------------------------------------------------------------

RoleLog run_sender(const RoleContext& ctx) {
  const auto& cfg = ctx.cfg;
  const HostClock clock(cfg.clock.sender_offset);
  UdpSocket sock(UdpAddress::parse(cfg.socket.sender_addr), cfg.socket.socket_buffer_bytes);
  const UdpAddress relay_addr = UdpAddress::parse(cfg.socket.relay_addr);
  const UdpAddress master = UdpAddress::parse(cfg.socket.receiver_addr);
  const Nanos idle = seconds(cfg.socket.idle_timeout_s);

  RoleLog log;
  log.role = "sender";
  std::uint64_t exchanges = 0;
  if (cfg.clock.correct) log.offset = sync_with_master(sock, clock, master, idle * 3, exchanges);
  ctx.note("sender: offset " + std::to_string(log.offset.count()) + " ns");

  CaptureEmulator capture(cfg.capture, cfg.seed);
  SenderEndpoint sender(make_sender_config(cfg, cfg.hop1.pacing_bps, cfg.hop1.overhead_bytes));
  const std::uint64_t frames = cfg.frame_count();
  const Nanos start = clock.now() + Nanos(100'000'000);
  std::deque<VolumetricFrame> pending;
  std::uint64_t next = 0;
  Nanos last_activity = clock.now();
  std::uint64_t send_failures = 0;

  for (;;) {
    Nanos now = clock.now();
    if (next < frames && now >= start + cfg.capture.tick_time(next)) {
      auto r = capture.capture_tick(static_cast<std::uint32_t>(next + 1), now);
      log.app_tx.push_back(r.record);
      pending.push_back(std::move(r.frame));
      ++next;
    }
    while (!pending.empty() && pending.front().capture_end <= now) {
      sender.enqueue_frame(pending.front(), now);
      pending.pop_front();
    }
    for (auto due = sender.next_emission_time(now); due && *due <= now; due = sender.next_emission_time(now)) {
      auto e = sender.emit(now);
      if (!sock.send_to(encode_packet(e->packet), relay_addr)) ++send_failures;
      last_activity = now;
      now = clock.now();
    }
    if (auto t = sender.next_timer(); t && *t <= now) sender.on_timer(now);

    if (next == frames && pending.empty() && !sender.has_pending() &&
        (frames == 0 || sender.acked(static_cast<std::uint32_t>(frames)))) {
      break;
    }
    if (next == frames && now - last_activity > idle) break;

    const Nanos wake = min_deadline({next < frames ? std::optional<Nanos>(start + cfg.capture.tick_time(next))
                                                   : std::nullopt,
                                     pending.empty() ? std::nullopt : std::optional<Nanos>(pending.front().capture_end),
                                     sender.next_emission_time(now), sender.next_timer()},
                                    now + kMaxWait);
    if (auto d = wait_for(sock, now, wake)) {
      if (auto p = decode(*d)) {
        if (const auto* c = std::get_if<ControlPacket>(&*p)) {
          sender.on_control(*c, clock.now());
          last_activity = clock.now();
        }
      }
    }
  }

  log.frames_sent = frames;
  log.send.push_back(sender.logs());
  const auto& s = sender.stats();
  log.counters = {{"packets_first", s.packets_first},         {"packets_retransmitted", s.packets_retransmitted},
                  {"tail_probes", s.tail_probes},             {"nacks_received", s.nacks_received},
                  {"acks_received", s.acks_received},         {"send_failures", send_failures},
                  {"capture_overruns", capture.overruns()},   {"sync_exchanges", exchanges}};
  ctx.note("sender: done, " + std::to_string(s.packets_sent()) + " packets");
  return log;
}

// ---------------------------------------------------------------------------

RoleLog run_relay(const RoleContext& ctx) {
  const auto& cfg = ctx.cfg;
  const HostClock clock(cfg.clock.relay_offset);
  UdpSocket sock(UdpAddress::parse(cfg.socket.relay_addr), cfg.socket.socket_buffer_bytes);
  UdpAddress sender_addr = UdpAddress::parse(cfg.socket.sender_addr);
  const UdpAddress master = UdpAddress::parse(cfg.socket.receiver_addr);
  std::vector<UdpAddress> rx_addrs;
  for (std::uint32_t k = 0; k < cfg.receivers; ++k) rx_addrs.push_back(master.with_port_offset(static_cast<std::uint16_t>(k)));
  const Nanos idle = seconds(cfg.socket.idle_timeout_s);
  const Nanos give_up = cfg.duration() + idle * 4;

  RoleLog log;
  log.role = "relay";
  std::uint64_t exchanges = 0;
  if (cfg.clock.correct) log.offset = sync_with_master(sock, clock, master, idle * 3, exchanges);
  ctx.note("relay: offset " + std::to_string(log.offset.count()) + " ns");

  RelayNode relay(make_relay_config(cfg));
  const Nanos started = clock.now();
  std::optional<Nanos> last_rx;
  std::uint64_t malformed = 0;
  std::uint64_t send_failures = 0;

  auto to_sender = [&](std::vector<ControlPacket>& controls) {
    for (auto& c : controls) send_control(sock, std::move(c), clock, sender_addr);
  };

  for (;;) {
    Nanos now = clock.now();
    if (auto t = relay.next_timer(); t && *t <= now) {
      auto ev = relay.on_timer(now);
      to_sender(ev.upstream_control);
    }
    for (std::size_t k = 0; k < rx_addrs.size(); ++k) {
      for (auto due = relay.next_emission_time(k, now); due && *due <= now; due = relay.next_emission_time(k, now)) {
        auto e = relay.emit(k, now);
        if (!sock.send_to(encode_packet(e->packet), rx_addrs[k])) ++send_failures;
        now = clock.now();
      }
      if (auto t = relay.next_downstream_timer(k); t && *t <= now) relay.on_downstream_timer(k, now);
    }
    if (last_rx && now - *last_rx > idle) break;
    if (!last_rx && now - started > give_up) break;

    Nanos wake = min_deadline({relay.next_timer()}, now + kMaxWait);
    for (std::size_t k = 0; k < rx_addrs.size(); ++k) {
      wake = min_deadline({relay.next_emission_time(k, now), relay.next_downstream_timer(k)}, wake);
    }
    auto d = wait_for(sock, now, wake);
    if (!d) continue;
    const Nanos at = clock.now();
    auto p = decode(*d);
    if (!p) {
      ++malformed;
      continue;
    }
    last_rx = at;
    if (const auto* data = std::get_if<DataPacket>(&*p)) {
      sender_addr = d->from;
      try {
        auto ev = relay.on_packet(*data, at);
        to_sender(ev.upstream_control);
      } catch (const TransportError&) {
        ++malformed;
      }
      continue;
    }
    const auto& c = std::get<ControlPacket>(*p);
    for (std::size_t k = 0; k < rx_addrs.size(); ++k) {
      if (d->from == rx_addrs[k]) relay.on_downstream_control(k, c, at);
    }
  }

  log.receive = relay.upstream().logs();
  for (const auto& [fid, entry] : relay.distribution_log()) {
    if (entry.upstream_complete_ts) log.upstream_complete[fid] = *entry.upstream_complete_ts;
  }
  for (std::size_t k = 0; k < rx_addrs.size(); ++k) log.send.push_back(relay.downstream(k).logs());
  const auto& s = relay.stats();
  log.counters = {{"segments_forwarded", s.segments_forwarded}, {"frames_stalled", s.frames_stalled},
                  {"backpressure_events", s.backpressure_events}, {"malformed_packets", malformed},
                  {"send_failures", send_failures},              {"sync_exchanges", exchanges}};
  ctx.note("relay: done");
  return log;
}

// ---------------------------------------------------------------------------

RoleLog run_receiver(const RoleContext& ctx, std::uint32_t k, const std::atomic<bool>* others_done) {
  const auto& cfg = ctx.cfg;
  const HostClock clock(k == 0 ? Nanos(0) : cfg.clock.receiver_offset);
  const UdpAddress master = UdpAddress::parse(cfg.socket.receiver_addr);
  UdpSocket sock(master.with_port_offset(static_cast<std::uint16_t>(k)), cfg.socket.socket_buffer_bytes);
  const UdpAddress relay_addr = UdpAddress::parse(cfg.socket.relay_addr);
  const Nanos idle = seconds(cfg.socket.idle_timeout_s);
  const Nanos give_up = cfg.duration() + idle * 4;

  RoleLog log;
  log.role = "receiver";
  log.index = k;
  std::uint64_t exchanges = 0;
  if (k != 0 && cfg.clock.correct) log.offset = sync_with_master(sock, clock, master, idle * 3, exchanges);

  ReceiverEndpoint rx(make_receiver_config(cfg));
  SeedStream render(cfg.seed, "app_rx/" + std::to_string(k));
  const Nanos started = clock.now();
  std::optional<Nanos> last_rx;
  std::uint64_t intact = 0;
  std::uint64_t corrupt = 0;
  std::uint64_t malformed = 0;

  auto to_relay = [&](std::vector<ControlPacket>& controls) {
    for (auto& c : controls) send_control(sock, std::move(c), clock, relay_addr);
  };

  for (;;) {
    const Nanos now = clock.now();
    if (auto t = rx.next_timer(); t && *t <= now) {
      auto controls = rx.on_timer(now);
      to_relay(controls);
    }
    const bool peers_done = others_done == nullptr || others_done->load();
    if (last_rx && now - *last_rx > idle && peers_done) break;
    if (!last_rx && now - started > give_up) break;

    auto d = wait_for(sock, now, min_deadline({rx.next_timer()}, now + kMaxWait));
    if (!d) continue;
    const Nanos at = clock.now();
    auto p = decode(*d);
    if (!p) {
      ++malformed;
      continue;
    }
    if (const auto* c = std::get_if<ControlPacket>(&*p)) {
      if (k == 0) serve_sync(sock, clock, *c, d->from);
      continue;
    }
    last_rx = at;
    RxEvent ev;
    try {
      ev = rx.on_packet(std::get<DataPacket>(*p), at);
    } catch (const TransportError&) {
      ++malformed;
      continue;
    }
    if (ev.kind == RxEventKind::frame_complete && ev.frame) {
      const auto fid = ev.frame->frame_id;
      if (cfg.render.busy_work) payload_checksum(ev.frame->payload.span());
      log.app_rx.emplace(fid, render_complete(cfg.render, fid, at, render));
      if (ev.frame->payload == make_synthetic_frame(fid, cfg.capture.sections, cfg.seed).payload) {
        ++intact;
      } else {
        ++corrupt;
      }
    }
    to_relay(ev.control);
  }

  log.receive = rx.logs();
  const auto& s = rx.stats();
  log.counters = {{"packets_received", s.packets_received}, {"duplicates", s.duplicates},
                  {"late_packets", s.late_packets},         {"nacks_sent", s.nacks_sent},
                  {"frames_intact", intact},                {"frames_corrupt", corrupt},
                  {"malformed_packets", malformed},         {"sync_exchanges", exchanges}};
  ctx.note("receiver " + std::to_string(k) + ": done, " + std::to_string(intact) + " frames intact");
  return log;
}

}  // namespace

SocketRole parse_socket_role(const std::string& text) {
  if (text == "all") return SocketRole::all;
  if (text == "sender") return SocketRole::sender;
  if (text == "relay") return SocketRole::relay;
  if (text == "receiver") return SocketRole::receiver;
  throw ConfigError("role must be one of all|sender|relay|receiver, got '" + text + "'");
}

std::string to_string(SocketRole role) {
  switch (role) {
    case SocketRole::all: return "all";
    case SocketRole::sender: return "sender";
    case SocketRole::relay: return "relay";
    case SocketRole::receiver: return "receiver";
  }
  return "?";
}

HostClock::HostClock(Nanos injected_offset)
    : wall0_(std::chrono::duration_cast<nanoseconds>(std::chrono::system_clock::now().time_since_epoch()).count()),
      steady0_(steady_ns()),
      injected_(injected_offset) {}

Nanos HostClock::now() const { return wall0_ + Nanos(steady_ns() - steady0_) - injected_; }

SocketRunResult run_socket(const ScenarioConfig& config, const SocketRunOptions& options) {
  std::mutex progress_mutex;
  const RoleContext ctx{config, options.progress, &progress_mutex};
  SocketRunResult result;

  switch (options.role) {
    case SocketRole::sender:
      result.logs.push_back(run_sender(ctx));
      break;
    case SocketRole::relay:
      result.logs.push_back(run_relay(ctx));
      break;
    case SocketRole::receiver:
      if (options.receiver_index >= config.receivers) {
        throw ConfigError("receiver index " + std::to_string(options.receiver_index) + " >= receivers");
      }
      result.logs.push_back(run_receiver(ctx, options.receiver_index, nullptr));
      break;
    case SocketRole::all: {
      std::vector<RoleLog> rx_logs(config.receivers);
      RoleLog sender_log;
      RoleLog relay_log;
      std::vector<std::exception_ptr> errors(config.receivers + 2);
      std::atomic<bool> slaves_done{false};
      std::vector<std::thread> threads;
      for (std::uint32_t k = 0; k < config.receivers; ++k) {
        threads.emplace_back([&, k] {
          try {
            rx_logs[k] = run_receiver(ctx, k, k == 0 ? &slaves_done : nullptr);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      std::thread relay([&] {
        try {
          relay_log = run_relay(ctx);
        } catch (...) {
          errors[config.receivers] = std::current_exception();
        }
      });
      std::thread sender([&] {
        try {
          sender_log = run_sender(ctx);
        } catch (...) {
          errors[config.receivers + 1] = std::current_exception();
        }
      });
      sender.join();
      relay.join();
      slaves_done = true;
      for (auto& t : threads) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      result.logs.push_back(sender_log);
      result.logs.push_back(relay_log);
      for (auto& l : rx_logs) result.logs.push_back(std::move(l));
      break;
    }
  }

  for (const auto& log : result.logs) write_role_log(log, config.out_dir);
  if (options.role == SocketRole::all) result.reports = assemble_directory(config.out_dir);
  return result;
}

}  // namespace vlab
