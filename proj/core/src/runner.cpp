#include "vlab/runner.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vlab/pipeline.hpp"
#include "vlab/probe.hpp"

namespace vlab {
namespace {

std::string join_messages(const std::vector<Diagnostic>& diagnostics) {
  std::string out = "invalid configuration";
  for (const auto& d : diagnostics) out += "\n  " + d.message();
  return out;
}

std::string ms(double ns) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << ns / 1e6;
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void append(RunOutput& r, const std::vector<ReportFiles>& files) {
  for (const auto& f : files) {
    r.files.push_back(f.frames);
    r.files.push_back(f.summary);
  }
}

void run_pipeline_sim(const ScenarioConfig& config, std::ostream& out, RunOutput& r) {
  PipelineResult result;
  if (config.trace) {
    const auto path = std::filesystem::path(config.out_dir) / "trace.csv";
    TraceWriter writer(path);
    result = run_pipeline(config, [&writer](const PacketTrace& t) { writer(t); });
    r.files.push_back(path);
  } else {
    result = run_pipeline(config);
  }
  append(r, write_pipeline_report(result, config.out_dir));
  for (std::size_t k = 0; k < result.receivers.size(); ++k) {
    const auto& rx = result.receivers[k];
    out << "receiver " << k << ": " << rx.summary.frames_completed << "/" << rx.summary.frames_sent
        << " frames completed, " << rx.frames_intact << " intact\n";
    out << format_summary(rx.summary);
  }
}

void run_pipeline_socket(const ScenarioConfig& config, std::ostream& out, const RunOptions& options,
                         RunOutput& r) {
  out << "warning: socket mode ignores LinkModel fields (hop1.*/hop2.* bandwidth, distance, switching, loss, "
         "reorder); real sockets decide those\n";
  SocketRunOptions so;
  so.role = options.role;
  so.receiver_index = options.receiver_index;
  so.progress = &out;
  const auto result = run_socket(config, so);
  for (const auto& log : result.logs) r.files.push_back(std::filesystem::path(config.out_dir) / log.file_name());
  append(r, result.reports);
  if (options.role == SocketRole::all && result.logs.size() >= 3) {
    const std::vector<RoleLog> receivers(result.logs.begin() + 2, result.logs.end());
    const auto outcomes = assemble_role_logs(result.logs[0], result.logs[1], receivers);
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      out << "receiver " << k << ": " << outcomes[k].summary.frames_completed << "/"
          << outcomes[k].summary.frames_sent << " frames completed, " << outcomes[k].frames_intact << " intact\n";
      out << format_summary(outcomes[k].summary);
    }
  }
}

void run_probe(const ScenarioConfig& config, std::ostream& out, RunOutput& r) {
  const auto hops = run_probe_scenario(config);
  for (const auto& p : write_probe_report(hops, config.out_dir)) r.files.push_back(p);
  out << std::left << std::setw(6) << "hop" << std::right << std::setw(8) << "bytes" << std::setw(12) << "mean_us"
      << std::setw(12) << "p99_us" << '\n';
  for (const auto& hop : hops) {
    for (const auto& size : hop.sizes) {
      const auto& t = size.stage("total");
      out << std::left << std::setw(6) << hop.hop << std::right << std::setw(8) << size.packet_bytes << std::fixed
          << std::setprecision(3) << std::setw(12) << t.mean_ns / 1e3 << std::setw(12)
          << static_cast<double>(t.p99.count()) / 1e3 << '\n';
    }
  }
}

void run_sweep(const ScenarioConfig& config, std::ostream& out, RunOutput& r) {
  const auto points = run_bandwidth_sweep(config);
  for (const auto& p : write_sweep_report(points, config.out_dir)) r.files.push_back(p);
  out << std::setw(14) << "bandwidth_bps" << std::setw(16) << "serialization" << std::setw(14) << "protocol_tx"
      << std::setw(12) << "frame_l" << std::setw(12) << "service_l" << "  (ms)\n";
  for (const auto& p : points) {
    out << std::setw(14) << p.bandwidth_bps << std::setw(16) << ms(static_cast<double>(p.serialization.count()))
        << std::setw(14) << ms(p.protocol_tx_ns) << std::setw(12) << ms(p.frame_l_ns) << std::setw(12)
        << ms(p.service_l_ns) << '\n';
  }
}

}  // namespace

InvalidConfigError::InvalidConfigError(std::vector<Diagnostic> diagnostics)
    : ConfigError(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string format_summary(const RunSummary& summary) {
  std::ostringstream s;
  s << std::left << std::setw(14) << "metric" << std::right << std::setw(11) << "mean_ms" << std::setw(11) << "p50_ms"
    << std::setw(11) << "p99_ms" << std::setw(11) << "jitter_ms" << '\n';
  for (const auto& m : summary.metrics) {
    s << std::left << std::setw(14) << m.name << std::right << std::setw(11) << ms(m.mean_ns) << std::setw(11)
      << ms(static_cast<double>(m.p50.count())) << std::setw(11) << ms(static_cast<double>(m.p99.count()))
      << std::setw(11) << ms(m.jitter_ns) << '\n';
  }
  return s.str();
}

RunOutput run_scenario(const ScenarioConfig& config, std::ostream& out, const RunOptions& options) {
  if (auto diags = validate(config); !diags.empty()) throw InvalidConfigError(std::move(diags));
  if (config.mode == RunMode::socket && config.experiment != Experiment::pipeline) {
    throw InvalidConfigError({{"experiment", to_string(config.experiment), "socket mode runs the pipeline only"}});
  }
  if (config.mode == RunMode::sim && options.role != SocketRole::all) {
    throw InvalidConfigError({{"mode", "sim", "--role needs mode=socket"}});
  }

  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  RunOutput r;
  write_text(dir / "config.txt", dump_config(config));
  r.files.push_back(dir / "config.txt");

  out << "scenario " << config.name << " (" << to_string(config.mode) << ", " << to_string(config.experiment)
      << ", seed " << config.seed << ")\n";
  switch (config.experiment) {
    case Experiment::pipeline:
      if (config.mode == RunMode::sim) {
        run_pipeline_sim(config, out, r);
      } else {
        run_pipeline_socket(config, out, options, r);
      }
      break;
    case Experiment::probe:
      run_probe(config, out, r);
      break;
    case Experiment::sweep:
      run_sweep(config, out, r);
      break;
  }
  return r;
}

}  // namespace vlab
