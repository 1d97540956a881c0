#include "rdt/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rdt/errors.hpp"
#include "rdt/hash.hpp"

namespace rdt::devsim {

void to_json(nlohmann::json& j, const ChipGeometry& g) {
  j = nlohmann::json{{"banks", g.banks},
                     {"rows_per_bank", g.rows_per_bank},
                     {"bits_per_row", g.bits_per_row},
                     {"tested_row_fraction", g.tested_row_fraction}};
}

void from_json(const nlohmann::json& j, ChipGeometry& g) {
  j.at("banks").get_to(g.banks);
  j.at("rows_per_bank").get_to(g.rows_per_bank);
  j.at("bits_per_row").get_to(g.bits_per_row);
  j.at("tested_row_fraction").get_to(g.tested_row_fraction);
}

void to_json(nlohmann::json& j, const ConditionPreset& p) {
  j = nlohmann::json{{"temperature_c", p.temperature_c},
                     {"t_aggon_ns", p.t_aggon_ns},
                     {"rdt_scale", p.rdt_scale}};
}

void from_json(const nlohmann::json& j, ConditionPreset& p) {
  j.at("temperature_c").get_to(p.temperature_c);
  j.at("t_aggon_ns").get_to(p.t_aggon_ns);
  if (j.contains("rdt_scale")) {
    j.at("rdt_scale").get_to(p.rdt_scale);
  } else {
    p = ConditionPreset::at(p.temperature_c, p.t_aggon_ns);
  }
}

void to_json(nlohmann::json& j, const RowDistribution& d) {
  j = nlohmann::json{{"log_median", d.log_median},
                     {"sigma_log", d.sigma_log},
                     {"clip_min", d.clip_min},
                     {"clip_max", d.clip_max},
                     {"weak_rows_per_bank", d.weak_rows_per_bank},
                     {"weak_rdt_low", d.weak_rdt_low},
                     {"weak_rdt_high", d.weak_rdt_high},
                     {"jitter_half_width", d.jitter_half_width},
                     {"cells_per_row", d.cells_per_row},
                     {"extra_multiplier_low", d.extra_multiplier_low},
                     {"extra_multiplier_high", d.extra_multiplier_high}};
}

void from_json(const nlohmann::json& j, RowDistribution& d) {
  d = RowDistribution{};
  if (j.contains("log_median")) j.at("log_median").get_to(d.log_median);
  if (j.contains("sigma_log")) j.at("sigma_log").get_to(d.sigma_log);
  if (j.contains("clip_min")) j.at("clip_min").get_to(d.clip_min);
  if (j.contains("clip_max")) j.at("clip_max").get_to(d.clip_max);
  if (j.contains("weak_rows_per_bank"))
    j.at("weak_rows_per_bank").get_to(d.weak_rows_per_bank);
  if (j.contains("weak_rdt_low")) j.at("weak_rdt_low").get_to(d.weak_rdt_low);
  if (j.contains("weak_rdt_high")) j.at("weak_rdt_high").get_to(d.weak_rdt_high);
  if (j.contains("jitter_half_width"))
    j.at("jitter_half_width").get_to(d.jitter_half_width);
  if (j.contains("cells_per_row")) j.at("cells_per_row").get_to(d.cells_per_row);
  if (j.contains("extra_multiplier_low"))
    j.at("extra_multiplier_low").get_to(d.extra_multiplier_low);
  if (j.contains("extra_multiplier_high"))
    j.at("extra_multiplier_high").get_to(d.extra_multiplier_high);
}

void to_json(nlohmann::json& j, const DeviceSpec& s) {
  j = nlohmann::json{{"geometry", s.geometry},
                     {"rdt_distribution", s.distribution},
                     {"preset", s.preset},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DeviceSpec& s) {
  j.at("geometry").get_to(s.geometry);
  j.at("rdt_distribution").get_to(s.distribution);
  if (j.contains("preset")) j.at("preset").get_to(s.preset);
  j.at("seed").get_to(s.seed);
}

void to_json(nlohmann::json& j, const RowAddr& a) {
  j = nlohmann::json{{"bank", a.bank}, {"row", a.row}};
}

void from_json(const nlohmann::json& j, RowAddr& a) {
  j.at("bank").get_to(a.bank);
  j.at("row").get_to(a.row);
}

}  // namespace rdt::devsim

namespace rdt::errmodel {

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json{{"delta_l", p.delta_l},
                     {"n", p.n},
                     {"growth_period", p.growth_period},
                     {"scrub_interval", p.scrub_interval},
                     {"flip_space_bits", p.flip_space_bits},
                     {"codeword_data_bits", p.codeword_data_bits},
                     {"codeword_total_bits", p.codeword_total_bits},
                     {"removal_enabled", p.removal_enabled},
                     {"removal_at_flip", p.removal_at_flip}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  p = ModelParams{};
  j.at("delta_l").get_to(p.delta_l);
  j.at("n").get_to(p.n);
  if (j.contains("growth_period")) j.at("growth_period").get_to(p.growth_period);
  if (j.contains("scrub_interval")) j.at("scrub_interval").get_to(p.scrub_interval);
  if (j.contains("flip_space_bits")) j.at("flip_space_bits").get_to(p.flip_space_bits);
  if (j.contains("codeword_data_bits"))
    j.at("codeword_data_bits").get_to(p.codeword_data_bits);
  if (j.contains("codeword_total_bits"))
    j.at("codeword_total_bits").get_to(p.codeword_total_bits);
  if (j.contains("removal_enabled")) j.at("removal_enabled").get_to(p.removal_enabled);
  if (j.contains("removal_at_flip")) j.at("removal_at_flip").get_to(p.removal_at_flip);
}

}  // namespace rdt::errmodel

namespace rdt::montecarlo {

void to_json(nlohmann::json& j, const EpochClock& c) {
  j = nlohmann::json{{"rows_hammered_per_epoch", c.rows_hammered_per_epoch},
                     {"hammer_count", c.hammer_count},
                     {"seconds_per_hammer", c.seconds_per_hammer}};
}

void from_json(const nlohmann::json& j, EpochClock& c) {
  c = EpochClock{};
  if (j.contains("rows_hammered_per_epoch"))
    j.at("rows_hammered_per_epoch").get_to(c.rows_hammered_per_epoch);
  if (j.contains("hammer_count")) j.at("hammer_count").get_to(c.hammer_count);
  if (j.contains("seconds_per_hammer"))
    j.at("seconds_per_hammer").get_to(c.seconds_per_hammer);
}

void to_json(nlohmann::json& j, const MttueEstimate& e) {
  j = nlohmann::json{
      {"mttue_epochs", e.mttue_epochs},
      {"mttue_hours", e.mttue_hours},
      {"censored_fraction", e.censored_fraction},
      {"method", e.method == MttueMethod::empirical_mean ? "empirical-mean"
                                                         : "hazard-extrapolated"},
      {"failures", e.failures},
      {"trials", e.trials}};
}

void to_json(nlohmann::json& j, const SweepRow& r) {
  j = nlohmann::json{{"label", r.label}};
  if (r.estimate) {
    j["estimate"] = *r.estimate;
  } else {
    j["estimate"] = nullptr;
  }
  if (!r.note.empty()) j["note"] = r.note;
}

}  // namespace rdt::montecarlo

namespace rdt::profiler {

void to_json(nlohmann::json& j, const ProfileSummary& s) {
  j = nlohmann::json{{"rows", s.rows},
                     {"rdt_min_per_iteration", s.rdt_min_per_iteration},
                     {"guardband_ratio", s.guardband_ratio},
                     {"weak_rows", s.weak_rows},
                     {"max_flips_in_one_iteration", s.max_flips_in_one_iteration},
                     {"unique_flip_locations", s.unique_flip_locations},
                     {"unique_flip_rows", s.unique_flip_rows},
                     {"rdt_p10", s.rdt_p10},
                     {"single_measurement", s.single_measurement}};
}

void from_json(const nlohmann::json& j, ProfileSummary& s) {
  j.at("rows").get_to(s.rows);
  j.at("rdt_min_per_iteration").get_to(s.rdt_min_per_iteration);
  j.at("guardband_ratio").get_to(s.guardband_ratio);
  j.at("weak_rows").get_to(s.weak_rows);
  j.at("max_flips_in_one_iteration").get_to(s.max_flips_in_one_iteration);
  j.at("unique_flip_locations").get_to(s.unique_flip_locations);
  j.at("unique_flip_rows").get_to(s.unique_flip_rows);
  j.at("rdt_p10").get_to(s.rdt_p10);
  j.at("single_measurement").get_to(s.single_measurement);
}

}  // namespace rdt::profiler

namespace rdt::svard {

void to_json(nlohmann::json& j, const MitigationStats& s) {
  j = nlohmann::json{{"total_activations", s.total_activations},
                     {"preventive_refreshes", s.preventive_refreshes},
                     {"refresh_rate_per_kilo_act", s.refresh_rate_per_kilo_act},
                     {"max_counter_seen", s.max_counter_seen}};
}

}  // namespace rdt::svard

namespace rdt::io {

nlohmann::json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

devsim::DeviceSpec load_device_spec(const fs::path& path) {
  devsim::DeviceSpec spec;
  try {
    load_json(path).get_to(spec);
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError("device spec " + path.string() + ": " + e.what());
  }
  return spec;
}

errmodel::ModelParams load_model_params(const fs::path& path) {
  errmodel::ModelParams params;
  try {
    load_json(path).get_to(params);
    params.validate();
  } catch (const std::exception& e) {
    throw ConfigError("model params " + path.string() + ": " + e.what());
  }
  return params;
}

std::vector<montecarlo::SweepConfig> load_sweep_configs(const fs::path& path) {
  std::vector<montecarlo::SweepConfig> configs;
  try {
    const nlohmann::json root = load_json(path);
    for (const nlohmann::json& entry : root.at("configs")) {
      montecarlo::SweepConfig config;
      entry.at("label").get_to(config.label);
      entry.at("model").get_to(config.params);
      config.params.validate();
      if (entry.contains("clock")) entry.at("clock").get_to(config.clock);
      if (entry.contains("trials")) entry.at("trials").get_to(config.trials);
      if (entry.contains("horizon")) entry.at("horizon").get_to(config.horizon);
      configs.push_back(std::move(config));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("sweep config " + path.string() + ": " + e.what());
  }
  if (configs.empty())
    throw ConfigError("sweep config " + path.string() + ": empty configs list");
  return configs;
}

profiler::ProfileSummary load_profile_summary(const fs::path& path) {
  profiler::ProfileSummary summary;
  try {
    load_json(path).get_to(summary);
  } catch (const std::exception& e) {
    throw ConfigError("profile summary " + path.string() + ": " + e.what());
  }
  return summary;
}

std::string config_hash(const nlohmann::json& config) {
  const std::uint64_t h = fnv1a64(config.dump());
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void write_matrix_csv(const fs::path& path, const profiler::RdtMatrix& matrix) {
  std::ostringstream out;
  out << "bank,row,iteration,measured_rdt\n";
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (std::uint32_t it = 0; it < matrix.iterations; ++it) {
      const auto v = matrix.value(r, it);
      out << matrix.rows[r].bank << ',' << matrix.rows[r].row << ',' << it << ',';
      if (v == profiler::kAboveGrid)
        out << "NA";
      else
        out << v;
      out << '\n';
    }
  }
  write_text(path, out.str());
}

void write_flip_log_json(const fs::path& path, const profiler::RdtMatrix& matrix) {
  nlohmann::json root;
  root["fine_grid"] = {{"start", matrix.fine_grid.start},
                       {"stop", matrix.fine_grid.stop},
                       {"step", matrix.fine_grid.step}};
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (std::uint32_t it = 0; it < matrix.iterations; ++it) {
      const auto& flips = matrix.log(r, it);
      if (flips.empty()) continue;
      nlohmann::json bits = nlohmann::json::array();
      for (const auto& flip : flips) bits.push_back(flip.bit);
      entries.push_back({{"bank", matrix.rows[r].bank},
                         {"row", matrix.rows[r].row},
                         {"iteration", it},
                         {"measured_rdt", matrix.value(r, it)},
                         {"bits", std::move(bits)}});
    }
  }
  root["entries"] = std::move(entries);
  write_json(path, root);
}

void write_failure_curve_csv(const fs::path& path,
                             const montecarlo::FailureCurve& curve,
                             const std::string& label) {
  if (!label.empty()) {
    std::vector<std::pair<std::string, montecarlo::FailureCurve>> curves;
    curves.emplace_back(label, curve);
    write_figure_csv(path, curves);
    return;
  }
  std::ostringstream out;
  out << "epoch,p_fail\n";
  char buf[32];
  for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), curve.p_fail_by[i]);
    out << curve.epochs[i] << ',' << std::string_view(buf, end - buf) << '\n';
  }
  write_text(path, out.str());
}

void write_figure_csv(
    const fs::path& path,
    const std::vector<std::pair<std::string, montecarlo::FailureCurve>>& curves) {
  std::ostringstream out;
  out << "epoch,p_fail,label\n";
  char buf[32];
  for (const auto& [label, curve] : curves)
    for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
      const auto [end, ec] =
          std::to_chars(buf, buf + sizeof(buf), curve.p_fail_by[i]);
      out << curve.epochs[i] << ',' << std::string_view(buf, end - buf) << ','
          << label << '\n';
    }
  write_text(path, out.str());
}

void write_trials_csv(const fs::path& path,
                      const std::vector<montecarlo::TrialResult>& trials) {
  std::ostringstream out;
  out << "trial,first_failure_epoch\n";
  for (std::size_t t = 0; t < trials.size(); ++t) {
    out << t << ',';
    if (trials[t].first_failure_epoch)
      out << *trials[t].first_failure_epoch;
    else
      out << "censored";
    out << '\n';
  }
  write_text(path, out.str());
}

void write_events_csv(const fs::path& path,
                      const std::vector<montecarlo::TrialEvent>& events) {
  std::ostringstream out;
  out << "trial,epoch,codeword\n";
  for (const auto& e : events)
    out << e.trial << ',' << e.event.epoch << ',' << e.event.codeword << '\n';
  write_text(path, out.str());
}

void write_census_csv(const fs::path& path, const profiler::BitflipCensus& census) {
  std::ostringstream out;
  out << "repetition,flips,cumulative_unique,new_unique\n";
  for (std::size_t i = 0; i < census.flips_per_repetition.size(); ++i)
    out << (i + 1) << ',' << census.flips_per_repetition[i] << ','
        << census.cumulative_unique[i] << ',' << census.new_unique[i] << '\n';
  write_text(path, out.str());
}

void write_threshold_map_csv(const fs::path& path, const svard::ThresholdMap& map) {
  std::ostringstream out;
  out << "bank,row,threshold,bin,demotions\n";
  for (const auto& entry : map.entries)
    out << entry.row.bank << ',' << entry.row.row << ',' << entry.threshold << ','
        << (entry.bin == svard::Bin::guarded ? "guarded" : "relaxed") << ','
        << entry.demotions << '\n';
  write_text(path, out.str());
}

svard::ThresholdMap load_threshold_map_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  svard::ThresholdMap map;
  std::string line;
  if (!std::getline(in, line) || line != "bank,row,threshold,bin,demotions")
    throw ConfigError("threshold map " + path.string() + ": bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    svard::RowThreshold entry;
    std::string token;
    std::getline(fields, token, ',');
    entry.row.bank = static_cast<std::uint32_t>(std::stoul(token));
    std::getline(fields, token, ',');
    entry.row.row = static_cast<std::uint32_t>(std::stoul(token));
    std::getline(fields, token, ',');
    entry.threshold = std::stoull(token);
    std::getline(fields, token, ',');
    if (token == "guarded")
      entry.bin = svard::Bin::guarded;
    else if (token == "relaxed")
      entry.bin = svard::Bin::relaxed;
    else
      throw ConfigError("threshold map " + path.string() + ": bad bin '" + token + "'");
    std::getline(fields, token, ',');
    entry.demotions = static_cast<std::uint32_t>(std::stoul(token));
    if (entry.threshold == 0)
      throw ConfigError("threshold map " + path.string() + ": zero threshold");
    map.entries.push_back(entry);
  }
  if (map.entries.empty())
    throw ConfigError("threshold map " + path.string() + ": no entries");
  std::sort(map.entries.begin(), map.entries.end(),
            [](const auto& a, const auto& b) { return a.row < b.row; });
  return map;
}

}  // namespace rdt::io
