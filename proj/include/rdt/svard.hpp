#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdt/profiler.hpp"

namespace rdt::svard {

using devsim::HammerCount;
using devsim::RowAddr;

enum class Bin { guarded, relaxed };

struct RowThreshold {
  RowAddr row;
  HammerCount threshold = 0;
  Bin bin = Bin::relaxed;
  std::uint32_t demotions = 0;
};

struct ThresholdMap {
  std::vector<RowThreshold> entries;  // sorted by (bank, row)
  HammerCount guarded_value = 0;
  HammerCount relaxed_value = 0;

  RowThreshold& at(RowAddr row);
  const RowThreshold& at(RowAddr row) const;
};

enum class Policy { one_size_fits_all, svard_two_bin };

struct AssignOptions {
  double guard_margin = 0.21;            // guarded = floor((1 - margin) * rdt_min)
  double tail_fraction = 0.10;           // rows expected under rdt_p10
  double extra_demotion_fraction = 0.10; // extra guarded share for temporal variation
};

// one_size_fits_all guards every row at floor(0.79 * rdt_min). svard_two_bin
// guards the lowest (tail + extra) fraction of rows by their single
// measurement (at least every row strictly below rdt_p10) and relaxes the
// rest to rdt_p10.
ThresholdMap assign_thresholds(const profiler::ProfileSummary& profile,
                               Policy policy, const AssignOptions& options = {});

// Halves the row's threshold (floor, never below 1). Repeated demotions keep
// halving.
void demote_row(ThresholdMap& map, RowAddr row);

struct TraceSpec {
  enum class Kind { uniform, single_row_hammer, double_sided, zipf };
  Kind kind = Kind::uniform;
  std::uint64_t length = 1'000'000;
  std::uint64_t seed = 0;
  double zipf_s = 1.2;
  // single_row_hammer target; defaults to the lowest-threshold row.
  std::optional<RowAddr> target;
};

// Activation sequence as indices into map.entries; deterministic per seed.
std::vector<std::uint32_t> generate_trace(const TraceSpec& spec,
                                          const ThresholdMap& map);

struct MitigationStats {
  std::uint64_t total_activations = 0;
  std::uint64_t preventive_refreshes = 0;
  double refresh_rate_per_kilo_act = 0.0;
  std::uint64_t max_counter_seen = 0;  // Chronus only
};

// Probabilistic mitigation: every activation of row r triggers a preventive
// refresh with probability 1 - epsilon^(1/threshold(r)). One uniform draw
// per activation regardless of outcome, so runs with shared seeds are
// comparable across threshold maps.
MitigationStats simulate_para(std::span<const std::uint32_t> trace,
                              const ThresholdMap& map, double epsilon,
                              std::uint64_t seed);

// Counter-based mitigation: a per-row counter triggers a preventive refresh
// when it reaches max(1, floor(threshold(r) / 2)), then resets.
MitigationStats simulate_chronus(std::span<const std::uint32_t> trace,
                                 const ThresholdMap& map);

std::string to_string(TraceSpec::Kind kind);
TraceSpec::Kind trace_kind_from_string(const std::string& name);

}  // namespace rdt::svard
