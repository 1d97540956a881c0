#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdt::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInsufficientData = 3;
inline constexpr int kExitInternal = 4;

// Flag-level overrides; they take precedence over config file fields.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> horizon;
  std::optional<std::string> out_dir;
  std::optional<std::string> figure;
  std::optional<std::uint32_t> threads;  // parallelism hint; never affects results
};

struct Diagnostic {
  std::string path;     // JSON-pointer-ish field path, e.g. "model_params:delta_l"
  std::string message;
};

// Schema validation for a run config plus the files it references.
// Aggregates everything it can find instead of failing fast; no side effects.
std::vector<Diagnostic> validate_config(const nlohmann::json& config,
                                        const fs::path& base_dir);

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<fs::path> artifacts;
  fs::path manifest;
};

// Loads, validates, and executes the config; writes artifacts named by
// command and config hash plus a manifest into the output directory.
RunOutcome run_config_file(const fs::path& config_path, const Overrides& overrides,
                           std::ostream& out, std::ostream& err);

// Known figure recipe names for the report command.
const std::vector<std::string>& figure_names();

}  // namespace rdt::cli
