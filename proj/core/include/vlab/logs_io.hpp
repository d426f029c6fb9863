#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vlab/app_emu.hpp"
#include "vlab/metrics.hpp"
#include "vlab/pipeline.hpp"
#include "vlab/transport.hpp"

namespace vlab {

/// Everything one socket-mode process knows after its run. Written as
/// <role>.log.csv; assemble_directory joins them afterwards.
struct RoleLog {
  std::string role;  // "sender", "relay" or "receiver"
  std::uint32_t index = 0;
  Nanos offset{0};  // estimated offset to the master clock
  std::uint64_t frames_sent = 0;
  std::vector<AppTxRecord> app_tx;
  std::vector<std::map<std::uint32_t, SendLogEntry>> send;  // one map per downstream
  std::map<std::uint32_t, ReceiveLogEntry> receive;
  std::map<std::uint32_t, Nanos> upstream_complete;
  std::map<std::uint32_t, AppRxRecord> app_rx;
  std::vector<std::pair<std::string, std::uint64_t>> counters;

  std::string file_name() const;
};

void write_role_log(const RoleLog& log, const std::filesystem::path& dir);
RoleLog read_role_log(const std::filesystem::path& path);

/// Joins sender, relay and receiver logs into per-receiver records.
std::vector<ReceiverOutcome> assemble_role_logs(const RoleLog& sender, const RoleLog& relay,
                                                const std::vector<RoleLog>& receivers);

/// Reads every role log in `dir`, assembles them and writes the frame and
/// summary CSVs next to them.
std::vector<ReportFiles> assemble_directory(const std::filesystem::path& dir);

}  // namespace vlab
