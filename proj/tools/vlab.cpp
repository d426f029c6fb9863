#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlab/config.hpp"
#include "vlab/logs_io.hpp"
#include "vlab/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

struct Source {
  std::string config_file;
  std::string scenario;
  std::vector<std::string> sets;
};

void add_source_options(CLI::App* cmd, Source& src) {
  auto* file = cmd->add_option("--config", src.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  auto* name = cmd->add_option("--scenario", src.scenario, "canned scenario name");
  file->excludes(name);
  cmd->add_option("--set", src.sets, "override one key, key=value (repeatable)");
}

// File or canned scenario, then VLAB_* environment variables, then --set.
vlab::ScenarioConfig load_source(const Source& src) {
  vlab::ScenarioConfig config;
  if (!src.scenario.empty()) {
    config = vlab::scenario(src.scenario);
  } else if (!src.config_file.empty()) {
    config = vlab::load_config(src.config_file);
  } else {
    throw vlab::ConfigError("one of --config or --scenario is required");
  }
  for (const auto& key : vlab::apply_env_overrides(config)) {
    std::cerr << "env override: " << key << "=" << vlab::get_config_value(config, key) << '\n';
  }
  for (const auto& kv : src.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw vlab::ConfigError("--set expects key=value, got '" + kv + "'");
    vlab::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void print_diagnostics(const std::vector<vlab::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << "config error: " << d.message() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlab: volumetric streaming latency laboratory"};
  app.require_subcommand(1);

  Source run_src;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string mode;
  std::string role = "all";
  std::uint32_t receiver_index = 0;
  auto* run = app.add_subcommand("run", "run a scenario and write CSV reports");
  add_source_options(run, run_src);
  run->add_option("--seed", seed, "random seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--mode", mode, "sim or socket")->check(CLI::IsMember({"sim", "socket"}));
  run->add_option("--role", role, "socket mode role")->check(CLI::IsMember({"all", "sender", "relay", "receiver"}));
  run->add_option("--receiver-index", receiver_index, "which receiver this process is (role receiver)");

  Source val_src;
  auto* validate = app.add_subcommand("validate", "check a configuration and list every problem");
  add_source_options(validate, val_src);

  std::string assemble_dir;
  auto* assemble = app.add_subcommand("assemble", "join socket-mode role logs into frame and summary CSVs");
  assemble->add_option("dir", assemble_dir, "directory holding *.log.csv")->required();

  bool show_keys = false;
  auto* list = app.add_subcommand("list", "list canned scenarios");
  list->add_flag("--keys", show_keys, "list every configuration key instead");

  std::string dump_name;
  auto* dump = app.add_subcommand("dump", "print a canned scenario as a config file");
  dump->add_option("scenario", dump_name, "scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      vlab::ScenarioConfig config = load_source(run_src);
      if (seed) config.seed = *seed;
      if (!out_dir.empty()) config.out_dir = out_dir;
      if (!mode.empty()) vlab::set_config_value(config, "mode", mode);
      vlab::RunOptions options;
      options.role = vlab::parse_socket_role(role);
      options.receiver_index = receiver_index;
      const auto result = vlab::run_scenario(config, std::cout, options);
      for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
      return kOk;
    }
    if (*validate) {
      const auto diags = vlab::validate(load_source(val_src));
      if (diags.empty()) {
        std::cout << "ok\n";
        return kOk;
      }
      print_diagnostics(diags);
      return kConfigError;
    }
    if (*assemble) {
      for (const auto& f : vlab::assemble_directory(assemble_dir)) {
        std::cout << "wrote " << f.frames.string() << "\nwrote " << f.summary.string() << '\n';
      }
      return kOk;
    }
    if (*list) {
      if (show_keys) {
        for (const auto& k : vlab::config_keys()) std::cout << k.name << '\n';
      } else {
        for (const auto& n : vlab::scenario_names()) std::cout << n << '\n';
      }
      return kOk;
    }
    if (*dump) {
      std::cout << vlab::dump_config(vlab::scenario(dump_name));
      return kOk;
    }
  } catch (const vlab::InvalidConfigError& e) {
    print_diagnostics(e.diagnostics());
    return kConfigError;
  } catch (const vlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kOk;
}
