#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdt/cli.hpp"
#include "rdt/io.hpp"
#include "rdt/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Read-disturbance threshold profiling and reliability toolkit"};
  app.set_version_flag("--version", rdt::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  rdt::cli::Overrides overrides;

  auto parse_u64 = [](const std::string& text, auto& slot) {
    try {
      std::size_t used = 0;
      const unsigned long long value = std::stoull(text, &used);
      if (used != text.size()) return false;
      slot = static_cast<typename std::remove_reference_t<decltype(slot)>::value_type>(value);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };

  auto add_common = [&](CLI::App* cmd, bool trials_opts) {
    cmd->add_option("--config", config_path, "Run configuration JSON")
        ->required();
    cmd->add_option("--seed", [&, parse_u64](const CLI::results_t& r) {
      return parse_u64(r[0], overrides.seed);
    }, "Master seed (overrides the config)");
    cmd->add_option("--out", [&](const CLI::results_t& r) {
      overrides.out_dir = r[0];
      return true;
    }, "Output directory (overrides the config)");
    cmd->add_option("--threads", [&, parse_u64](const CLI::results_t& r) {
      return parse_u64(r[0], overrides.threads);
    }, "Worker threads; a hint only, never affects results");
    if (trials_opts) {
      cmd->add_option("--trials", [&, parse_u64](const CLI::results_t& r) {
        return parse_u64(r[0], overrides.trials);
      }, "Monte-Carlo trials (overrides the config)");
      cmd->add_option("--horizon", [&, parse_u64](const CLI::results_t& r) {
        return parse_u64(r[0], overrides.horizon);
      }, "Trial horizon in epochs (overrides the config)");
    }
  };

  add_common(app.add_subcommand("profile", "Profile a simulated device's RDTs"),
             false);
  add_common(app.add_subcommand("census", "Repeated-hammer bitflip census"),
             false);
  add_common(app.add_subcommand("model", "Run the bitflip model ensemble"), true);
  add_common(app.add_subcommand("mttue", "Estimate mean time to uncorrectable error"),
             true);
  add_common(app.add_subcommand("sweep", "MTTUE table over labelled parameter sets"),
             true);
  add_common(app.add_subcommand("svard", "Assign per-row mitigation thresholds"),
             false);
  add_common(app.add_subcommand("mitigate", "Simulate PARA/Chronus over a trace"),
             false);
  auto* report = app.add_subcommand("report", "Reproduce a figure's plot data");
  add_common(report, true);
  report->add_option("--figure", [&](const CLI::results_t& r) {
    overrides.figure = r[0];
    return true;
  }, "Figure recipe name");

  auto* validate = app.add_subcommand("validate", "Validate a run configuration");
  std::string validate_path;
  validate->add_option("config", validate_path, "Run configuration JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every other argv problem is a config error.
    const int code = app.exit(e);
    return code == 0 ? 0 : rdt::cli::kExitConfigError;
  }

  if (validate->parsed()) {
    try {
      const auto config = rdt::io::load_json(validate_path);
      const auto base = std::filesystem::path(validate_path).parent_path();
      const auto diagnostics = rdt::cli::validate_config(config, base);
      for (const auto& d : diagnostics)
        std::cerr << (d.path.empty() ? std::string("config") : d.path) << ": "
                  << d.message << "\n";
      if (diagnostics.empty()) {
        std::cout << "ok\n";
        return rdt::cli::kExitOk;
      }
      return rdt::cli::kExitConfigError;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return rdt::cli::kExitConfigError;
    }
  }

  const auto outcome =
      rdt::cli::run_config_file(config_path, overrides, std::cout, std::cerr);
  return outcome.exit_code;
}
