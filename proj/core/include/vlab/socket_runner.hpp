#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlab/config.hpp"
#include "vlab/logs_io.hpp"

namespace vlab {

enum class SocketRole { all, sender, relay, receiver };

SocketRole parse_socket_role(const std::string& text);
std::string to_string(SocketRole role);

/// Wall clock sampled once, advanced by the monotonic clock, shifted by an
/// injected offset: local = host - offset.
class HostClock {
 public:
  explicit HostClock(Nanos injected_offset = Nanos(0));
  Nanos now() const;

 private:
  Nanos wall0_{0};
  std::int64_t steady0_ = 0;
  Nanos injected_{0};
};

struct SocketRunOptions {
  SocketRole role = SocketRole::all;
  std::uint32_t receiver_index = 0;  // for role == receiver
  std::ostream* progress = nullptr;
};

struct SocketRunResult {
  std::vector<RoleLog> logs;         // logs produced by this process
  std::vector<ReportFiles> reports;  // only when every role ran here
};

/// Runs one role (or all of them, one thread each) over real UDP sockets.
/// Role logs go to config.out_dir; with role == all they are assembled into
/// the frame and summary CSVs as well.
SocketRunResult run_socket(const ScenarioConfig& config, const SocketRunOptions& options = {});

}  // namespace vlab
