#pragma once

#include <compare>
#include <cstdint>
#include <utility>
#include <vector>

#include "rdt/rng.hpp"

namespace rdt::devsim {

using HammerCount = std::uint64_t;

struct RowAddr {
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  friend bool operator==(const RowAddr&, const RowAddr&) = default;
  friend std::strong_ordering operator<=>(const RowAddr&, const RowAddr&) = default;
};

// One bitflip observed in a hammered victim row.
struct Bitflip {
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  std::uint32_t bit = 0;
  friend bool operator==(const Bitflip&, const Bitflip&) = default;
  friend std::strong_ordering operator<=>(const Bitflip&, const Bitflip&) = default;
};

// Sorted by bit offset, entries unique, all in the hammered victim row.
using BitflipSet = std::vector<Bitflip>;

struct ChipGeometry {
  std::uint32_t banks = 1;
  std::uint32_t rows_per_bank = 4096;
  std::uint32_t bits_per_row = 65536;
  double tested_row_fraction = 1.0 / 16.0;

  std::uint32_t tested_rows_per_bank() const;
  void validate() const;
};

// Temperature / aggressor-on-time operating point. Realized RDTs scale
// multiplicatively by rdt_scale; (35 ns, 50 C) is the reference point and
// must carry scale 1.0.
struct ConditionPreset {
  int temperature_c = 50;
  int t_aggon_ns = 35;
  double rdt_scale = 1.0;

  static ConditionPreset reference() { return {}; }
  // Named operating point with the default (documented, monotone) scale
  // table. The scales are configuration knobs, not measured laws.
  static ConditionPreset at(int temperature_c, int t_aggon_ns);
  void validate() const;
};

struct CellFault {
  std::uint32_t bit_offset = 0;
  double threshold_multiplier = 1.0;  // exactly one 1.0 cell per row: the weakest
};

struct RowModel {
  HammerCount base_rdt = 0;
  double jitter_half_width = 0.0;
  std::vector<CellFault> cells;
};

// Base-RDT law: log-normal clipped to [clip_min, clip_max] for the bulk of
// tested rows, plus a deterministic ladder of weak rows spanning
// [weak_rdt_low, weak_rdt_high]. The ladder keeps weak-row statistics stable
// across device seeds.
struct RowDistribution {
  double log_median = 14000.0;
  double sigma_log = 0.2;
  HammerCount clip_min = 4000;
  HammerCount clip_max = 30000;
  std::uint32_t weak_rows_per_bank = 16;
  double weak_rdt_low = 7000.0;
  double weak_rdt_high = 12000.0;
  double jitter_half_width = 0.117;
  std::uint32_t cells_per_row = 4;
  double extra_multiplier_low = 1.05;
  double extra_multiplier_high = 3.0;

  void validate() const;
};

struct DeviceSpec {
  ChipGeometry geometry;
  RowDistribution distribution;
  ConditionPreset preset;
  std::uint64_t seed = 0;

  // Calibrated fixture: jitter tuned so that the minimum/maximum of the
  // per-episode minimum RDT over 1000 episodes lands near 0.79.
  static DeviceSpec worst_case();
  void validate() const;
};

// Synthetic DRAM chip with per-row, per-episode realized RDTs hidden behind
// a hammer interface. A measurement episode fixes every tested row's
// realized RDT; begin_episode() redraws them. Calls that advance episodes
// mutate RNG state, so a device must not be shared between threads without
// external serialization; distinct devices are independent.
class DeviceModel {
 public:
  explicit DeviceModel(const DeviceSpec& spec);

  // Explicit-table construction: the given rows become the tested rows.
  DeviceModel(ChipGeometry geometry, ConditionPreset preset,
              std::vector<std::pair<RowAddr, RowModel>> tested_rows,
              std::uint64_t seed);

  const ChipGeometry& geometry() const { return geometry_; }
  const ConditionPreset& preset() const { return preset_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<RowAddr>& tested_rows() const { return tested_rows_; }
  bool is_tested(RowAddr addr) const;
  const RowModel& row_model(RowAddr addr) const;

  // Starts a new measurement episode and returns its id (0, 1, 2, ...).
  std::uint64_t begin_episode();
  std::uint64_t current_episode() const;  // throws before the first episode
  std::uint64_t episodes_begun() const { return episodes_begun_; }

  // Returns exactly the cells of `victim` whose episode threshold is
  // <= hammer_count. The weakest cell's threshold equals the realized RDT.
  BitflipSet hammer(RowAddr victim, HammerCount hammer_count,
                    std::uint64_t episode) const;

  // Test-only introspection: the realized RDT of `victim` in `episode`.
  // Never used by profiling logic.
  HammerCount oracle_true_rdt(RowAddr victim, std::uint64_t episode) const;

 private:
  std::size_t tested_index(RowAddr addr) const;
  void check_episode(std::uint64_t episode) const;

  ChipGeometry geometry_;
  ConditionPreset preset_;
  std::uint64_t seed_ = 0;
  std::vector<RowAddr> tested_rows_;           // sorted by (bank, row)
  std::vector<RowModel> row_models_;           // parallel to tested_rows_
  std::vector<HammerCount> realized_;          // parallel; current episode
  Rng episode_rng_;
  std::uint64_t episodes_begun_ = 0;
};

}  // namespace rdt::devsim
