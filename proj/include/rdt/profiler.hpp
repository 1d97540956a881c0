#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rdt/devsim.hpp"

namespace rdt::profiler {

using devsim::BitflipSet;
using devsim::DeviceModel;
using devsim::HammerCount;
using devsim::RowAddr;

// Measured values are grid points; 0 marks a row that never flipped inside
// the grid ("above-grid").
inline constexpr HammerCount kAboveGrid = 0;

struct HammerGrid {
  HammerCount start = 0;
  HammerCount stop = 0;
  HammerCount step = 1;

  // 1,000 to 25,000 in increments of 1,000.
  static HammerGrid coarse() { return HammerGrid{1000, 25000, 1000}; }
  // rdt_min/2 to rdt_min*2 in increments of rdt_min/30 (floored, min 1).
  static HammerGrid fine_from(HammerCount rdt_min);

  std::size_t size() const {
    return static_cast<std::size_t>((stop - start) / step) + 1;
  }
  HammerCount point(std::size_t i) const { return start + step * i; }
  void validate() const;
};

// rows x iterations of measured RDT values plus the bitflips observed at
// each measured value.
struct RdtMatrix {
  std::vector<RowAddr> rows;
  std::uint32_t iterations = 0;
  HammerGrid fine_grid;
  std::vector<HammerCount> values;     // rows.size() * iterations, kAboveGrid = sentinel
  std::vector<BitflipSet> flip_log;    // parallel to values

  HammerCount value(std::size_t row_idx, std::uint32_t iteration) const {
    return values[row_idx * iterations + iteration];
  }
  const BitflipSet& log(std::size_t row_idx, std::uint32_t iteration) const {
    return flip_log[row_idx * iterations + iteration];
  }
  std::vector<HammerCount> column(std::uint32_t iteration) const;
};

struct RowFlipStats {
  RowAddr row;
  std::uint32_t iterations_with_flips = 0;
  std::uint64_t total_flips = 0;
};

// Census of rows that flip at hammer counts at or below the largest
// per-iteration minimum RDT. unique_bit_locations is the default reading of
// the model's location count; unique rows are reported alongside.
struct CensusResult {
  HammerCount census_hc = 0;               // max over iterations of the per-iteration min
  std::vector<RowAddr> weak_rows;
  std::uint32_t unique_bit_locations = 0;  // delta-L
  std::uint32_t unique_rows = 0;
  std::uint32_t max_flips_in_one_iteration = 0;  // N
  std::vector<RowFlipStats> per_row;
};

struct ProfileSummary {
  std::vector<RowAddr> rows;
  std::vector<HammerCount> rdt_min_per_iteration;
  double guardband_ratio = 1.0;  // min / max of rdt_min_per_iteration
  std::vector<RowAddr> weak_rows;
  std::uint32_t max_flips_in_one_iteration = 0;  // N
  std::uint32_t unique_flip_locations = 0;       // delta-L (bit granularity)
  std::uint32_t unique_flip_rows = 0;
  HammerCount rdt_p10 = 0;                       // from the first iteration
  std::vector<HammerCount> single_measurement;   // first-iteration column
};

// Rank 1 = smallest measured RDT in that iteration; ties break by row id
// ascending; above-grid rows rank last.
struct RankDistribution {
  std::vector<RowAddr> rows;
  std::uint32_t iterations = 0;
  std::vector<std::uint32_t> ranks;  // rows.size() * iterations, 1-based
  std::vector<RowAddr> weak_rows;

  std::uint32_t rank(std::size_t row_idx, std::uint32_t iteration) const {
    return ranks[row_idx * iterations + iteration];
  }
};

struct BitflipCensus {
  HammerCount hammer_count = 0;
  std::vector<std::uint32_t> flips_per_repetition;
  std::vector<std::uint32_t> cumulative_unique;
  std::vector<std::uint32_t> new_unique;
};

// Minimum over tested rows of the smallest grid hammer count that produces a
// bitflip, within the device's current episode. Throws NoFlipInGridError if
// nothing flips at the grid stop.
HammerCount coarse_min_scan(DeviceModel& device,
                            const HammerGrid& grid = HammerGrid::coarse());

// Ascending scan; smallest grid point whose hammer produces a non-empty
// flip set, or nullopt when the row never flips inside the grid.
std::optional<HammerCount> measure_row_rdt(DeviceModel& device, RowAddr row,
                                           const HammerGrid& fine_grid,
                                           std::uint64_t episode,
                                           BitflipSet* flips_out = nullptr);

// One fresh episode per iteration; every tested row measured on the fine
// grid derived from rdt_min.
RdtMatrix repeated_profile(DeviceModel& device, HammerCount rdt_min,
                           std::uint32_t iterations = 1000);

std::vector<HammerCount> per_iteration_min(const RdtMatrix& matrix);

CensusResult weak_row_census(const RdtMatrix& matrix);

RankDistribution rank_distribution(const RdtMatrix& matrix);

// Hammers every tested row `repetitions` times at a fixed hammer count,
// one episode per repetition.
BitflipCensus bitflip_census_at(DeviceModel& device, HammerCount hammer_count,
                                std::uint32_t repetitions = 1000);

// Largest value v such that at least (1-q) of the rows measure >= v.
// Above-grid sentinels sort as +infinity.
HammerCount rdt_percentile(std::span<const HammerCount> column, double q = 0.10);

ProfileSummary summarize(const RdtMatrix& matrix);

}  // namespace rdt::profiler
