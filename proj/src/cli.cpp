#include "rdt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "rdt/errors.hpp"
#include "rdt/hash.hpp"
#include "rdt/io.hpp"
#include "rdt/version.hpp"

namespace rdt::cli {

namespace {

using nlohmann::json;

const std::set<std::string>& commands() {
  static const std::set<std::string> kCommands = {
      "profile", "census", "model", "mttue", "sweep", "svard", "mitigate", "report"};
  return kCommands;
}

bool is_trial_command(const std::string& command) {
  return command == "model" || command == "mttue" || command == "sweep" ||
         command == "report";
}

fs::path resolve_path(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---------------------------------------------------------------- validation

void add(std::vector<Diagnostic>& out, std::string path, std::string message) {
  out.push_back(Diagnostic{std::move(path), std::move(message)});
}

bool check_uint_field(const json& j, const std::string& key, const std::string& prefix,
                      std::uint64_t min_value, bool required,
                      std::vector<Diagnostic>& out) {
  if (!j.contains(key)) {
    if (required) add(out, prefix + key, "required field is missing");
    return false;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    add(out, prefix + key, "must be an integer");
    return false;
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    add(out, prefix + key, "must be >= " + std::to_string(min_value));
    return false;
  }
  if (v.get<std::uint64_t>() < min_value) {
    add(out, prefix + key, "must be >= " + std::to_string(min_value));
    return false;
  }
  return true;
}

bool check_number_field(const json& j, const std::string& key,
                        const std::string& prefix, bool required,
                        std::vector<Diagnostic>& out) {
  if (!j.contains(key)) {
    if (required) add(out, prefix + key, "required field is missing");
    return false;
  }
  if (!j.at(key).is_number()) {
    add(out, prefix + key, "must be a number");
    return false;
  }
  return true;
}

bool check_string_field(const json& j, const std::string& key,
                        const std::string& prefix, bool required,
                        std::vector<Diagnostic>& out) {
  if (!j.contains(key)) {
    if (required) add(out, prefix + key, "required field is missing");
    return false;
  }
  if (!j.at(key).is_string()) {
    add(out, prefix + key, "must be a string");
    return false;
  }
  return true;
}

void validate_model_params_json(const json& j, const std::string& prefix,
                                std::vector<Diagnostic>& out) {
  if (!j.is_object()) {
    add(out, prefix, "must be a JSON object");
    return;
  }
  check_uint_field(j, "delta_l", prefix, 1, true, out);
  check_uint_field(j, "n", prefix, 1, true, out);
  check_uint_field(j, "growth_period", prefix, 1, false, out);
  check_uint_field(j, "scrub_interval", prefix, 1, false, out);
  const bool space_ok = check_uint_field(j, "flip_space_bits", prefix, 1, false, out);
  const bool data_ok = check_uint_field(j, "codeword_data_bits", prefix, 1, false, out);
  if (space_ok && data_ok) {
    const auto space = j.at("flip_space_bits").get<std::uint64_t>();
    const auto data = j.at("codeword_data_bits").get<std::uint64_t>();
    if (data == 0 || space % data != 0)
      add(out, prefix + "flip_space_bits",
          "must be a multiple of codeword_data_bits");
  }
  for (const char* key : {"removal_enabled", "removal_at_flip"})
    if (j.contains(key) && !j.at(key).is_boolean())
      add(out, prefix + key, "must be a boolean");
}

void validate_device_spec_json(const json& j, const std::string& prefix,
                               std::vector<Diagnostic>& out) {
  if (!j.is_object()) {
    add(out, prefix, "must be a JSON object");
    return;
  }
  if (!j.contains("geometry") || !j.at("geometry").is_object()) {
    add(out, prefix + "geometry", "required object is missing");
  } else {
    const json& g = j.at("geometry");
    const std::string gp = prefix + "geometry.";
    check_uint_field(g, "banks", gp, 1, true, out);
    check_uint_field(g, "rows_per_bank", gp, 1, true, out);
    check_uint_field(g, "bits_per_row", gp, 1, true, out);
    if (check_number_field(g, "tested_row_fraction", gp, true, out)) {
      const double f = g.at("tested_row_fraction").get<double>();
      if (!(f > 0.0) || f > 1.0)
        add(out, gp + "tested_row_fraction", "must be in (0, 1]");
    }
  }
  if (!j.contains("rdt_distribution") || !j.at("rdt_distribution").is_object()) {
    add(out, prefix + "rdt_distribution", "required object is missing");
  } else {
    const json& d = j.at("rdt_distribution");
    const std::string dp = prefix + "rdt_distribution.";
    if (check_number_field(d, "jitter_half_width", dp, false, out)) {
      const double w = d.at("jitter_half_width").get<double>();
      if (w < 0.0 || w >= 1.0)
        add(out, dp + "jitter_half_width", "must be in [0, 1)");
    }
  }
  if (j.contains("preset")) {
    const json& p = j.at("preset");
    const std::string pp = prefix + "preset.";
    if (check_uint_field(p, "temperature_c", pp, 1, true, out)) {
      const auto t = p.at("temperature_c").get<std::int64_t>();
      if (t != 50 && t != 65 && t != 80)
        add(out, pp + "temperature_c", "must be one of {50, 65, 80}");
    }
    if (check_uint_field(p, "t_aggon_ns", pp, 1, true, out)) {
      const auto t = p.at("t_aggon_ns").get<std::int64_t>();
      if (t != 35 && t != 300 && t != 1000)
        add(out, pp + "t_aggon_ns", "must be one of {35, 300, 1000}");
    }
  }
  check_uint_field(j, "seed", prefix, 0, true, out);
}

void validate_trace_json(const json& j, const std::string& prefix,
                         std::vector<Diagnostic>& out) {
  if (!j.is_object()) {
    add(out, prefix, "must be a JSON object");
    return;
  }
  if (check_string_field(j, "kind", prefix, true, out)) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "uniform" && kind != "single-row-hammer" &&
        kind != "double-sided" && kind != "zipf")
      add(out, prefix + "kind",
          "must be one of uniform, single-row-hammer, double-sided, zipf");
  }
  check_uint_field(j, "length", prefix, 1, true, out);
  check_uint_field(j, "seed", prefix, 0, true, out);
  if (j.contains("zipf_s") && check_number_field(j, "zipf_s", prefix, false, out)) {
    if (!(j.at("zipf_s").get<double>() > 0.0))
      add(out, prefix + "zipf_s", "must be > 0");
  }
}

json load_referenced(const json& config, const std::string& key,
                     const fs::path& base_dir, std::vector<Diagnostic>& out,
                     bool* ok) {
  *ok = false;
  if (!config.contains(key)) {
    add(out, key, "required field is missing");
    return {};
  }
  if (!config.at(key).is_string()) {
    add(out, key, "must be a path string");
    return {};
  }
  const fs::path path = resolve_path(base_dir, config.at(key).get<std::string>());
  if (!fs::exists(path)) {
    add(out, key, "referenced path does not exist: " + path.string());
    return {};
  }
  try {
    json j = io::load_json(path);
    *ok = true;
    return j;
  } catch (const std::exception& e) {
    add(out, key, e.what());
    return {};
  }
}

}  // namespace

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> kFigures = {
      "failure_probability", "failure_probability_new",
      "temperature_error_probability", "taggon_error_probability",
      "spatial_failure_probability"};
  return kFigures;
}

std::vector<Diagnostic> validate_config(const json& config,
                                        const fs::path& base_dir) {
  std::vector<Diagnostic> out;
  if (!config.is_object()) {
    add(out, "", "config must be a JSON object");
    return out;
  }
  if (!check_string_field(config, "command", "", true, out)) return out;
  const auto command = config.at("command").get<std::string>();
  if (!commands().contains(command)) {
    add(out, "command", "unknown command '" + command + "'");
    return out;
  }

  if (config.contains("out_dir") && !config.at("out_dir").is_string())
    add(out, "out_dir", "must be a string");
  check_uint_field(config, "threads", "", 1, false, out);

  if (is_trial_command(command) || command == "mitigate") {
    if (!config.contains("seed"))
      add(out, "seed", "stochastic command '" + command + "' requires a seed");
    else
      check_uint_field(config, "seed", "", 0, true, out);
  }

  if (command == "profile" || command == "census") {
    bool ok = false;
    const json spec = load_referenced(config, "device_spec", base_dir, out, &ok);
    if (ok) validate_device_spec_json(spec, "device_spec:", out);
    if (command == "profile")
      check_uint_field(config, "iterations", "", 1, false, out);
    else {
      check_uint_field(config, "repetitions", "", 1, false, out);
      check_uint_field(config, "hammer_count", "", 1, false, out);
      check_uint_field(config, "profile_iterations", "", 1, false, out);
    }
  }

  if (command == "model" || command == "mttue") {
    bool ok = false;
    const json params = load_referenced(config, "model_params", base_dir, out, &ok);
    if (ok) validate_model_params_json(params, "model_params:", out);
    check_uint_field(config, "trials", "", 1, false, out);
    if (check_uint_field(config, "horizon", "", 1, true, out) && ok &&
        params.contains("scrub_interval") &&
        params.at("scrub_interval").is_number_unsigned()) {
      if (config.at("horizon").get<std::uint64_t>() <
          params.at("scrub_interval").get<std::uint64_t>())
        add(out, "horizon", "must be >= the model's scrub_interval");
    }
  }

  if (command == "sweep") {
    bool ok = false;
    const json sweeps = load_referenced(config, "sweep_configs", base_dir, out, &ok);
    if (ok) {
      if (!sweeps.contains("configs") || !sweeps.at("configs").is_array() ||
          sweeps.at("configs").empty()) {
        add(out, "sweep_configs:configs", "must be a non-empty array");
      } else {
        std::size_t i = 0;
        for (const json& entry : sweeps.at("configs")) {
          const std::string prefix =
              "sweep_configs:configs[" + std::to_string(i) + "].";
          check_string_field(entry, "label", prefix, true, out);
          if (entry.contains("model"))
            validate_model_params_json(entry.at("model"), prefix + "model.", out);
          else
            add(out, prefix + "model", "required field is missing");
          ++i;
        }
      }
    }
    check_uint_field(config, "trials", "", 1, false, out);
    check_uint_field(config, "horizon", "", 1, true, out);
  }

  if (command == "svard") {
    bool ok = false;
    const json summary =
        load_referenced(config, "profile_summary", base_dir, out, &ok);
    if (ok) {
      for (const char* key : {"rows", "single_measurement"})
        if (!summary.contains(key) || !summary.at(key).is_array() ||
            summary.at(key).empty())
          add(out, std::string("profile_summary:") + key,
              "must be a non-empty array");
      check_uint_field(summary, "rdt_p10", "profile_summary:", 1, true, out);
    }
    if (config.contains("policy") &&
        check_string_field(config, "policy", "", false, out)) {
      const auto policy = config.at("policy").get<std::string>();
      if (policy != "one-size-fits-all" && policy != "svard-two-bin")
        add(out, "policy", "must be one-size-fits-all or svard-two-bin");
    }
  }

  if (command == "mitigate") {
    if (!config.contains("threshold_map") || !config.at("threshold_map").is_string()) {
      add(out, "threshold_map", "required path field is missing");
    } else {
      const fs::path path =
          resolve_path(base_dir, config.at("threshold_map").get<std::string>());
      if (!fs::exists(path))
        add(out, "threshold_map", "referenced path does not exist: " + path.string());
    }
    if (check_string_field(config, "mitigation", "", true, out)) {
      const auto kind = config.at("mitigation").get<std::string>();
      if (kind != "para" && kind != "chronus")
        add(out, "mitigation", "must be para or chronus");
    }
    if (config.contains("epsilon") &&
        check_number_field(config, "epsilon", "", false, out)) {
      const double eps = config.at("epsilon").get<double>();
      if (!(eps > 0.0) || eps >= 1.0) add(out, "epsilon", "must be in (0, 1)");
    }
    if (!config.contains("trace"))
      add(out, "trace", "required object is missing");
    else
      validate_trace_json(config.at("trace"), "trace.", out);
  }

  if (command == "report") {
    if (check_string_field(config, "figure", "", true, out)) {
      const auto figure = config.at("figure").get<std::string>();
      const auto& names = figure_names();
      if (std::find(names.begin(), names.end(), figure) == names.end())
        add(out, "figure", "unknown figure '" + figure + "'");
    }
    check_uint_field(config, "trials", "", 1, false, out);
    check_uint_field(config, "horizon", "", 1, false, out);
  }

  return out;
}

// ----------------------------------------------------------------- execution

namespace {

struct FigureEntry {
  std::string label;
  errmodel::ModelParams params;
  std::uint64_t horizon;
};

struct FigureRecipe {
  std::vector<FigureEntry> entries;
  std::uint32_t default_trials = 2000;
};

errmodel::ModelParams preset_params(std::uint32_t delta_l, std::uint32_t n,
                                    bool removal) {
  errmodel::ModelParams params;
  params.delta_l = delta_l;
  params.n = n;
  params.removal_enabled = removal;
  return params;
}

// The per-condition (delta_l, n) values are fitted so the removal-enabled
// model lands on the reported sensitivity MTTUEs under the default flip
// space and epoch clock.
FigureRecipe figure_recipe(const std::string& name) {
  FigureRecipe recipe;
  if (name == "failure_probability") {
    recipe.entries = {{"worst-module", preset_params(12, 5, false), 400000},
                      {"best-module", preset_params(1, 2, false), 400000}};
  } else if (name == "failure_probability_new") {
    recipe.entries = {{"single-rdt", preset_params(12, 5, false), 400000},
                      {"removal-after-detection", preset_params(12, 5, true), 400000}};
  } else if (name == "temperature_error_probability") {
    recipe.entries = {{"m12-50c", preset_params(51, 5, true), 300000},
                      {"m12-65c", preset_params(1, 1, true), 300000},
                      {"m12-80c", preset_params(177, 5, true), 300000}};
  } else if (name == "taggon_error_probability") {
    recipe.entries = {{"m13-35ns", preset_params(12, 5, true), 300000},
                      {"m13-300ns", preset_params(44, 5, true), 300000},
                      {"m13-1000ns", preset_params(222, 5, true), 300000}};
  } else if (name == "spatial_failure_probability") {
    recipe.entries = {{"delta-l-10", preset_params(10, 10, true), 150000},
                      {"delta-l-100", preset_params(100, 100, true), 150000},
                      {"delta-l-1000", preset_params(1000, 1000, true), 150000}};
  } else {
    throw ConfigError("unknown figure '" + name + "'");
  }
  return recipe;
}

struct ExecContext {
  json config;       // merged run config
  fs::path base_dir; // directory of the config file
  fs::path out_dir;
  std::uint32_t threads = 1;
  json resolved;     // config with referenced file contents embedded
  std::string hash;
  std::vector<fs::path> artifacts;
};

std::string artifact_name(const ExecContext& ctx, const std::string& stem,
                          const std::string& ext) {
  return stem + "_" + ctx.hash + "." + ext;
}

fs::path write_artifact_json(ExecContext& ctx, const std::string& stem,
                             const json& payload) {
  const fs::path path = ctx.out_dir / artifact_name(ctx, stem, "json");
  io::write_json(path, payload);
  ctx.artifacts.push_back(path);
  return path;
}

template <typename WriteFn>
fs::path write_artifact(ExecContext& ctx, const std::string& stem,
                        const std::string& ext, WriteFn&& write) {
  const fs::path path = ctx.out_dir / artifact_name(ctx, stem, ext);
  write(path);
  ctx.artifacts.push_back(path);
  return path;
}

std::uint64_t seed_of(const ExecContext& ctx) {
  return ctx.config.at("seed").get<std::uint64_t>();
}

void embed_referenced(ExecContext& ctx, const std::string& key, bool as_text) {
  if (!ctx.config.contains(key)) return;
  const fs::path path =
      resolve_path(ctx.base_dir, ctx.config.at(key).get<std::string>());
  json entry;
  entry["path"] = ctx.config.at(key);
  if (as_text) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream content;
    content << in.rdbuf();
    entry["content"] = content.str();
  } else {
    entry["content"] = io::load_json(path);
  }
  ctx.resolved[key] = entry;
}

void run_profile(ExecContext& ctx, std::ostream& out) {
  const auto spec = io::load_device_spec(
      resolve_path(ctx.base_dir, ctx.config.at("device_spec").get<std::string>()));
  const auto iterations = ctx.config.value("iterations", 1000u);

  devsim::DeviceModel device(spec);
  device.begin_episode();
  const auto rdt_min = profiler::coarse_min_scan(device);
  out << "coarse RDT_min: " << rdt_min << "\n";

  const auto matrix = profiler::repeated_profile(device, rdt_min, iterations);
  const auto summary = profiler::summarize(matrix);
  out << "guardband ratio: " << summary.guardband_ratio
      << ", weak rows: " << summary.weak_rows.size()
      << ", unique flip locations: " << summary.unique_flip_locations
      << ", max flips in one iteration: " << summary.max_flips_in_one_iteration
      << ", RDT_90%: " << summary.rdt_p10 << "\n";

  write_artifact(ctx, "profile_matrix", "csv",
                 [&](const fs::path& p) { io::write_matrix_csv(p, matrix); });
  write_artifact(ctx, "profile_fliplog", "json",
                 [&](const fs::path& p) { io::write_flip_log_json(p, matrix); });
  json summary_json = summary;
  summary_json["coarse_rdt_min"] = rdt_min;
  write_artifact_json(ctx, "profile_summary", summary_json);
}

void run_census(ExecContext& ctx, std::ostream& out) {
  const auto spec = io::load_device_spec(
      resolve_path(ctx.base_dir, ctx.config.at("device_spec").get<std::string>()));
  const auto repetitions = ctx.config.value("repetitions", 1000u);

  devsim::DeviceModel device(spec);
  devsim::HammerCount hc;
  if (ctx.config.contains("hammer_count")) {
    hc = ctx.config.at("hammer_count").get<std::uint64_t>();
  } else {
    const auto profile_iterations = ctx.config.value("profile_iterations", 100u);
    device.begin_episode();
    const auto rdt_min = profiler::coarse_min_scan(device);
    const auto matrix =
        profiler::repeated_profile(device, rdt_min, profile_iterations);
    hc = profiler::summarize(matrix).rdt_p10;
  }
  out << "census hammer count: " << hc << "\n";

  const auto census = profiler::bitflip_census_at(device, hc, repetitions);
  out << "unique locations after " << repetitions
      << " repetitions: " << census.cumulative_unique.back() << "\n";
  write_artifact(ctx, "census", "csv",
                 [&](const fs::path& p) { io::write_census_csv(p, census); });
}

montecarlo::EnsembleResult run_ensemble(const ExecContext& ctx,
                                        const errmodel::ModelParams& params) {
  const auto trials = ctx.config.value("trials", 10000u);
  const auto horizon = ctx.config.at("horizon").get<std::uint64_t>();
  return montecarlo::run_trials(params, trials, horizon, seed_of(ctx), ctx.threads);
}

void run_model(ExecContext& ctx, std::ostream& out, bool with_estimate) {
  const auto params = io::load_model_params(
      resolve_path(ctx.base_dir, ctx.config.at("model_params").get<std::string>()));
  montecarlo::EpochClock clock;
  if (ctx.config.contains("clock")) ctx.config.at("clock").get_to(clock);

  const auto ensemble = run_ensemble(ctx, params);
  const std::string stem = with_estimate ? "mttue" : "model";
  write_artifact(ctx, stem + "_curve", "csv", [&](const fs::path& p) {
    io::write_failure_curve_csv(p, ensemble.curve);
  });
  write_artifact(ctx, stem + "_trials", "csv", [&](const fs::path& p) {
    io::write_trials_csv(p, ensemble.trials);
  });
  write_artifact(ctx, stem + "_events", "csv", [&](const fs::path& p) {
    io::write_events_csv(p, ensemble.events);
  });

  if (with_estimate) {
    const auto estimate = montecarlo::estimate_mttue(
        ensemble.trials, ensemble.horizon, params.scrub_interval, clock);
    out << "MTTUE: " << estimate.mttue_epochs << " epochs ("
        << estimate.mttue_hours << " hours), censored fraction "
        << estimate.censored_fraction << "\n";
    json payload = estimate;
    payload["horizon"] = ensemble.horizon;
    payload["epoch_hours"] = montecarlo::epoch_hours(clock);
    write_artifact_json(ctx, "mttue", payload);
  }
}

void run_sweep(ExecContext& ctx, std::ostream& out) {
  const auto configs = io::load_sweep_configs(
      resolve_path(ctx.base_dir, ctx.config.at("sweep_configs").get<std::string>()));
  const auto trials = ctx.config.value("trials", 2000u);
  const auto horizon = ctx.config.at("horizon").get<std::uint64_t>();

  const auto rows =
      montecarlo::sweep(configs, trials, horizon, seed_of(ctx), ctx.threads);
  for (const auto& row : rows) {
    out << row.label << ": ";
    if (row.estimate)
      out << row.estimate->mttue_hours << " hours\n";
    else
      out << row.note << "\n";
  }
  json payload;
  payload["rows"] = rows;
  payload["trials"] = trials;
  payload["horizon"] = horizon;
  write_artifact_json(ctx, "sweep", payload);
}

void run_svard(ExecContext& ctx, std::ostream& out) {
  const auto summary = io::load_profile_summary(resolve_path(
      ctx.base_dir, ctx.config.at("profile_summary").get<std::string>()));
  const auto policy_name =
      ctx.config.value("policy", std::string("svard-two-bin"));
  const svard::Policy policy = policy_name == "one-size-fits-all"
                                   ? svard::Policy::one_size_fits_all
                                   : svard::Policy::svard_two_bin;
  svard::AssignOptions options;
  options.guard_margin = ctx.config.value("guard_margin", options.guard_margin);
  options.tail_fraction = ctx.config.value("tail_fraction", options.tail_fraction);
  options.extra_demotion_fraction =
      ctx.config.value("extra_demotion_fraction", options.extra_demotion_fraction);

  const auto map = svard::assign_thresholds(summary, policy, options);
  std::size_t guarded = 0;
  for (const auto& entry : map.entries)
    if (entry.bin == svard::Bin::guarded) ++guarded;
  out << "thresholds: guarded " << map.guarded_value << " (" << guarded
      << " rows), relaxed " << map.relaxed_value << " ("
      << (map.entries.size() - guarded) << " rows)\n";
  write_artifact(ctx, "svard_thresholds", "csv", [&](const fs::path& p) {
    io::write_threshold_map_csv(p, map);
  });
}

void run_mitigate(ExecContext& ctx, std::ostream& out) {
  const auto map = io::load_threshold_map_csv(
      resolve_path(ctx.base_dir, ctx.config.at("threshold_map").get<std::string>()));

  const json& trace_json = ctx.config.at("trace");
  svard::TraceSpec trace_spec;
  trace_spec.kind =
      svard::trace_kind_from_string(trace_json.at("kind").get<std::string>());
  trace_spec.length = trace_json.at("length").get<std::uint64_t>();
  trace_spec.seed = trace_json.at("seed").get<std::uint64_t>();
  trace_spec.zipf_s = trace_json.value("zipf_s", trace_spec.zipf_s);
  if (trace_json.contains("target")) {
    devsim::RowAddr target;
    trace_json.at("target").get_to(target);
    trace_spec.target = target;
  }

  const auto trace = svard::generate_trace(trace_spec, map);
  const auto mitigation = ctx.config.at("mitigation").get<std::string>();
  svard::MitigationStats stats;
  if (mitigation == "para") {
    const double epsilon = ctx.config.value("epsilon", 1e-15);
    stats = svard::simulate_para(trace, map, epsilon, seed_of(ctx));
  } else {
    stats = svard::simulate_chronus(trace, map);
  }
  out << mitigation << " over " << svard::to_string(trace_spec.kind) << " trace: "
      << stats.preventive_refreshes << " preventive refreshes ("
      << stats.refresh_rate_per_kilo_act << " per kilo-activation)\n";

  json payload = stats;
  payload["mitigation"] = mitigation;
  payload["trace_kind"] = svard::to_string(trace_spec.kind);
  if (mitigation != "chronus") payload.erase("max_counter_seen");
  write_artifact_json(ctx, "mitigate_" + mitigation, payload);
}

void run_report(ExecContext& ctx, std::ostream& out) {
  const auto figure = ctx.config.at("figure").get<std::string>();
  const FigureRecipe recipe = figure_recipe(figure);
  const auto trials = ctx.config.value("trials", recipe.default_trials);
  const std::uint64_t seed = seed_of(ctx);

  std::vector<std::pair<std::string, montecarlo::FailureCurve>> curves;
  for (const FigureEntry& entry : recipe.entries) {
    const std::uint64_t horizon = ctx.config.value("horizon", entry.horizon);
    const std::uint64_t entry_seed = splitmix64(seed) ^ fnv1a64(entry.label);
    const auto ensemble = montecarlo::run_trials(entry.params, trials, horizon,
                                                 entry_seed, ctx.threads);
    out << figure << " / " << entry.label << ": p_fail(horizon) = "
        << ensemble.curve.p_fail_by.back() << "\n";
    curves.emplace_back(entry.label, ensemble.curve);
  }
  write_artifact(ctx, "figure_" + figure, "csv", [&](const fs::path& p) {
    io::write_figure_csv(p, curves);
  });
}

}  // namespace

RunOutcome run_config_file(const fs::path& config_path, const Overrides& overrides,
                           std::ostream& out, std::ostream& err) {
  RunOutcome outcome;
  const auto started_at = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();

  try {
    ExecContext ctx;
    ctx.config = io::load_json(config_path);
    ctx.base_dir = config_path.has_parent_path() ? config_path.parent_path()
                                                 : fs::path(".");

    if (overrides.seed) ctx.config["seed"] = *overrides.seed;
    if (overrides.trials) ctx.config["trials"] = *overrides.trials;
    if (overrides.horizon) ctx.config["horizon"] = *overrides.horizon;
    if (overrides.out_dir) ctx.config["out_dir"] = *overrides.out_dir;
    if (overrides.figure) ctx.config["figure"] = *overrides.figure;
    if (overrides.threads) ctx.config["threads"] = *overrides.threads;

    const auto diagnostics = validate_config(ctx.config, ctx.base_dir);
    if (!diagnostics.empty()) {
      for (const auto& d : diagnostics)
        err << "config error [" << (d.path.empty() ? "config" : d.path)
            << "]: " << d.message << "\n";
      outcome.exit_code = kExitConfigError;
      return outcome;
    }

    const auto command = ctx.config.at("command").get<std::string>();
    ctx.threads = ctx.config.value("threads", 1u);
    ctx.out_dir = resolve_path(fs::current_path(),
                               ctx.config.value("out_dir", std::string(".")));
    fs::create_directories(ctx.out_dir);

    // Resolved config: referenced file contents embedded so every artifact
    // is re-derivable from the manifest alone.
    ctx.resolved = ctx.config;
    for (const char* key :
         {"device_spec", "model_params", "sweep_configs", "profile_summary"})
      embed_referenced(ctx, key, /*as_text=*/false);
    embed_referenced(ctx, "threshold_map", /*as_text=*/true);
    // out_dir and threads are run plumbing; they never change results, so
    // they stay out of the hash that names artifacts.
    json hashed = ctx.resolved;
    hashed.erase("out_dir");
    hashed.erase("threads");
    ctx.hash = io::config_hash(hashed);

    if (command == "profile") run_profile(ctx, out);
    else if (command == "census") run_census(ctx, out);
    else if (command == "model") run_model(ctx, out, false);
    else if (command == "mttue") run_model(ctx, out, true);
    else if (command == "sweep") run_sweep(ctx, out);
    else if (command == "svard") run_svard(ctx, out);
    else if (command == "mitigate") run_mitigate(ctx, out);
    else if (command == "report") run_report(ctx, out);

    json manifest;
    manifest["command"] = command;
    manifest["config"] = ctx.resolved;
    manifest["config_hash"] = ctx.hash;
    manifest["seed"] =
        ctx.config.contains("seed") ? json(ctx.config.at("seed")) : json(nullptr);
    manifest["toolkit_version"] = kVersion;
    manifest["started_at_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            started_at.time_since_epoch())
            .count();
    manifest["wall_time_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count();
    json names = json::array();
    for (const auto& a : ctx.artifacts) names.push_back(a.filename().string());
    manifest["artifacts"] = names;

    outcome.manifest =
        ctx.out_dir / ("manifest_" + command + "_" + ctx.hash + ".json");
    io::write_json(outcome.manifest, manifest);
    outcome.artifacts = std::move(ctx.artifacts);
    outcome.exit_code = kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    outcome.exit_code = kExitConfigError;
  } catch (const NoFlipInGridError& e) {
    err << "no-flip-in-grid: " << e.what() << "\n";
    outcome.exit_code = kExitInsufficientData;
  } catch (const InsufficientFailuresError& e) {
    err << "insufficient-failures: " << e.what() << "\n";
    outcome.exit_code = kExitInsufficientData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    outcome.exit_code = kExitInternal;
  }
  return outcome;
}

}  // namespace rdt::cli
