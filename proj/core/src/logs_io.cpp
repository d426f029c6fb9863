#include "vlab/logs_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vlab {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::int64_t to_i64(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(where + ": bad integer '" + s + "'");
  }
}

}  // namespace

std::string RoleLog::file_name() const {
  if (role == "receiver") return "receiver" + std::to_string(index) + ".log.csv";
  return role + ".log.csv";
}

void write_role_log(const RoleLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / log.file_name();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "role," << log.role << ',' << log.index << '\n';
  out << "offset," << log.offset.count() << '\n';
  out << "frames_sent," << log.frames_sent << '\n';
  for (const auto& r : log.app_tx) {
    out << "app_tx," << r.frame_id << ',' << r.capture_start.count() << ',' << r.capture_end.count() << ','
        << (r.overrun ? 1 : 0) << '\n';
  }
  for (std::size_t k = 0; k < log.send.size(); ++k) {
    for (const auto& [fid, e] : log.send[k]) {
      out << "send," << k << ',' << fid << ',' << e.first_packet_send_ts.count() << ','
          << e.last_packet_send_ts.count() << ',' << e.packet_count << ',' << e.retransmit_count << ',' << e.bytes
          << ',' << (e.finished ? 1 : 0) << '\n';
    }
  }
  for (const auto& [fid, e] : log.receive) {
    out << "recv," << fid << ',' << e.first_packet_recv_ts.count() << ',' << e.last_packet_recv_ts.count() << ','
        << e.embedded_send_ts_of_first_packet.count() << ',' << e.nack_count << ',' << e.packets_received << ','
        << e.duplicates << ',' << (e.completed ? 1 : 0) << ',' << (e.dropped ? 1 : 0) << '\n';
  }
  for (const auto& [fid, ts] : log.upstream_complete) out << "upstream_complete," << fid << ',' << ts.count() << '\n';
  for (const auto& [fid, r] : log.app_rx) {
    out << "app_rx," << fid << ',' << r.frame_complete_ts.count() << ',' << r.display_ts.count() << '\n';
  }
  for (const auto& [name, v] : log.counters) out << "counter," << name << ',' << v << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

RoleLog read_role_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  RoleLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    const std::string where = path.filename().string() + " line " + std::to_string(n);
    auto need = [&](std::size_t count) {
      if (f.size() != count) throw Error(where + ": expected " + std::to_string(count) + " fields");
    };
    auto i = [&](std::size_t idx) { return to_i64(f[idx], where); };
    auto u32 = [&](std::size_t idx) { return static_cast<std::uint32_t>(i(idx)); };
    const std::string& kind = f[0];
    if (kind == "role") {
      need(3);
      log.role = f[1];
      log.index = u32(2);
    } else if (kind == "offset") {
      need(2);
      log.offset = Nanos(i(1));
    } else if (kind == "frames_sent") {
      need(2);
      log.frames_sent = static_cast<std::uint64_t>(i(1));
    } else if (kind == "app_tx") {
      need(5);
      log.app_tx.push_back(AppTxRecord{u32(1), Nanos(i(2)), Nanos(i(3)), i(4) != 0});
    } else if (kind == "send") {
      need(9);
      const auto k = static_cast<std::size_t>(i(1));
      if (log.send.size() <= k) log.send.resize(k + 1);
      SendLogEntry e;
      e.frame_id = u32(2);
      e.first_packet_send_ts = Nanos(i(3));
      e.last_packet_send_ts = Nanos(i(4));
      e.packet_count = u32(5);
      e.retransmit_count = u32(6);
      e.bytes = static_cast<std::uint64_t>(i(7));
      e.finished = i(8) != 0;
      log.send[k][e.frame_id] = e;
    } else if (kind == "recv") {
      need(10);
      ReceiveLogEntry e;
      e.frame_id = u32(1);
      e.first_packet_recv_ts = Nanos(i(2));
      e.last_packet_recv_ts = Nanos(i(3));
      e.embedded_send_ts_of_first_packet = Nanos(i(4));
      e.nack_count = u32(5);
      e.packets_received = u32(6);
      e.duplicates = u32(7);
      e.completed = i(8) != 0;
      e.dropped = i(9) != 0;
      log.receive[e.frame_id] = e;
    } else if (kind == "upstream_complete") {
      need(3);
      log.upstream_complete[u32(1)] = Nanos(i(2));
    } else if (kind == "app_rx") {
      need(4);
      log.app_rx[u32(1)] = AppRxRecord{u32(1), Nanos(i(2)), Nanos(i(3))};
    } else if (kind == "counter") {
      need(3);
      log.counters.emplace_back(f[1], static_cast<std::uint64_t>(i(2)));
    } else {
      throw Error(where + ": unknown record kind '" + kind + "'");
    }
  }
  if (log.role.empty()) throw Error(path.string() + ": missing role line");
  return log;
}

std::vector<ReceiverOutcome> assemble_role_logs(const RoleLog& sender, const RoleLog& relay,
                                                const std::vector<RoleLog>& receivers) {
  std::map<std::uint32_t, const AppTxRecord*> app_tx;
  for (const auto& r : sender.app_tx) app_tx.emplace(r.frame_id, &r);
  auto find_send = [](const RoleLog& log, std::size_t k, std::uint32_t fid) -> const SendLogEntry* {
    if (k >= log.send.size()) return nullptr;
    const auto it = log.send[k].find(fid);
    return it == log.send[k].end() ? nullptr : &it->second;
  };

  std::vector<ReceiverOutcome> outcomes;
  for (const auto& rx : receivers) {
    ReceiverOutcome out;
    for (std::uint64_t i = 0; i < sender.frames_sent; ++i) {
      const auto fid = static_cast<std::uint32_t>(i + 1);
      FrameLogs logs;
      logs.frame_id = fid;
      if (auto it = app_tx.find(fid); it != app_tx.end()) logs.app_tx = it->second;
      logs.origin_send = find_send(sender, 0, fid);
      if (auto it = relay.receive.find(fid); it != relay.receive.end()) logs.relay_receive = &it->second;
      if (auto it = relay.upstream_complete.find(fid); it != relay.upstream_complete.end()) {
        logs.upstream_complete_ts = &it->second;
      }
      logs.relay_send = find_send(relay, rx.index, fid);
      if (auto it = rx.receive.find(fid); it != rx.receive.end()) logs.final_receive = &it->second;
      if (auto it = rx.app_rx.find(fid); it != rx.app_rx.end()) logs.app_rx = &it->second;
      logs.offsets = ClockOffsets{sender.offset, relay.offset, rx.offset};

      const bool complete = logs.final_receive && logs.final_receive->completed && logs.app_rx &&
                            logs.origin_send && logs.relay_receive && logs.relay_send && logs.app_tx &&
                            logs.upstream_complete_ts;
      if (complete) {
        out.records.push_back(assemble_record(logs));
      } else {
        std::uint32_t retx = 0;
        if (logs.origin_send) retx += logs.origin_send->retransmit_count;
        if (logs.relay_send) retx += logs.relay_send->retransmit_count;
        out.records.push_back(dropped_record(fid, retx));
      }
    }
    out.summary = summarize(out.records);
    out.summary.frames_sent = sender.frames_sent;
    for (const auto* log : {&sender, &relay, &rx}) {
      for (const auto& [name, v] : log->counters) {
        out.summary.counters.emplace_back(log->file_name().substr(0, log->file_name().find('.')) + "." + name, v);
      }
      if (log == &rx) {
        for (const auto& [name, v] : log->counters) {
          if (name == "frames_intact") out.frames_intact = v;
          if (name == "frames_corrupt") out.frames_corrupt = v;
        }
      }
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

std::vector<ReportFiles> assemble_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  const RoleLog sender = read_role_log(dir / "sender.log.csv");
  const RoleLog relay = read_role_log(dir / "relay.log.csv");
  std::vector<RoleLog> receivers;
  for (std::uint32_t k = 0;; ++k) {
    const auto path = dir / ("receiver" + std::to_string(k) + ".log.csv");
    if (!std::filesystem::exists(path)) break;
    receivers.push_back(read_role_log(path));
  }
  if (receivers.empty()) throw Error(dir.string() + ": no receiver0.log.csv");
  const auto outcomes = assemble_role_logs(sender, relay, receivers);
  std::vector<ReportFiles> files;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const std::string suffix = k == 0 ? "" : "_receiver" + std::to_string(k);
    files.push_back(write_report(outcomes[k].records, outcomes[k].summary, dir, suffix));
  }
  return files;
}

}  // namespace vlab
