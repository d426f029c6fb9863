#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlab/config.hpp"
#include "vlab/socket_runner.hpp"

namespace vlab {

/// Thrown when validate() reports problems; carries every diagnostic.
class InvalidConfigError : public ConfigError {
 public:
  explicit InvalidConfigError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct RunOptions {
  SocketRole role = SocketRole::all;
  std::uint32_t receiver_index = 0;
};

struct RunOutput {
  std::vector<std::filesystem::path> files;
};

/// Validates, runs the configured experiment, writes config.txt and the CSV
/// reports into config.out_dir, and prints a summary table to `out`.
RunOutput run_scenario(const ScenarioConfig& config, std::ostream& out, const RunOptions& options = {});

/// Aligned text table of the per-frame metrics.
std::string format_summary(const RunSummary& summary);

}  // namespace vlab
