#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdt/devsim.hpp"
#include "rdt/errmodel.hpp"
#include "rdt/montecarlo.hpp"
#include "rdt/profiler.hpp"
#include "rdt/svard.hpp"

// JSON bindings live next to their types' namespaces so nlohmann finds them
// by ADL; file formats are documented in the README.

namespace rdt::devsim {
void to_json(nlohmann::json& j, const ChipGeometry& g);
void from_json(const nlohmann::json& j, ChipGeometry& g);
void to_json(nlohmann::json& j, const ConditionPreset& p);
void from_json(const nlohmann::json& j, ConditionPreset& p);
void to_json(nlohmann::json& j, const RowDistribution& d);
void from_json(const nlohmann::json& j, RowDistribution& d);
void to_json(nlohmann::json& j, const DeviceSpec& s);
void from_json(const nlohmann::json& j, DeviceSpec& s);
void to_json(nlohmann::json& j, const RowAddr& a);
void from_json(const nlohmann::json& j, RowAddr& a);
}  // namespace rdt::devsim

namespace rdt::errmodel {
void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);
}  // namespace rdt::errmodel

namespace rdt::montecarlo {
void to_json(nlohmann::json& j, const EpochClock& c);
void from_json(const nlohmann::json& j, EpochClock& c);
void to_json(nlohmann::json& j, const MttueEstimate& e);
void to_json(nlohmann::json& j, const SweepRow& r);
}  // namespace rdt::montecarlo

namespace rdt::profiler {
void to_json(nlohmann::json& j, const ProfileSummary& s);
void from_json(const nlohmann::json& j, ProfileSummary& s);
}  // namespace rdt::profiler

namespace rdt::svard {
void to_json(nlohmann::json& j, const MitigationStats& s);
}  // namespace rdt::svard

namespace rdt::io {

namespace fs = std::filesystem;

nlohmann::json load_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);
void write_text(const fs::path& path, const std::string& text);

devsim::DeviceSpec load_device_spec(const fs::path& path);
errmodel::ModelParams load_model_params(const fs::path& path);
std::vector<montecarlo::SweepConfig> load_sweep_configs(const fs::path& path);
profiler::ProfileSummary load_profile_summary(const fs::path& path);
svard::ThresholdMap load_threshold_map_csv(const fs::path& path);

// 16-hex-digit FNV-1a of the canonical (key-sorted) JSON dump.
std::string config_hash(const nlohmann::json& config);

// bank,row,iteration,measured_rdt with NA for above-grid rows.
void write_matrix_csv(const fs::path& path, const profiler::RdtMatrix& matrix);
// Sidecar with the fine grid and the non-empty flip sets.
void write_flip_log_json(const fs::path& path, const profiler::RdtMatrix& matrix);

void write_failure_curve_csv(const fs::path& path,
                             const montecarlo::FailureCurve& curve,
                             const std::string& label = "");
// Multiple labelled curves in one file: epoch,p_fail,label.
void write_figure_csv(
    const fs::path& path,
    const std::vector<std::pair<std::string, montecarlo::FailureCurve>>& curves);
void write_trials_csv(const fs::path& path,
                      const std::vector<montecarlo::TrialResult>& trials);
void write_events_csv(const fs::path& path,
                      const std::vector<montecarlo::TrialEvent>& events);
void write_census_csv(const fs::path& path, const profiler::BitflipCensus& census);
void write_threshold_map_csv(const fs::path& path, const svard::ThresholdMap& map);

}  // namespace rdt::io
