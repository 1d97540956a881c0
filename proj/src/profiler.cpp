#include "rdt/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include "rdt/errors.hpp"

namespace rdt::profiler {

HammerGrid HammerGrid::fine_from(HammerCount rdt_min) {
  if (rdt_min == 0)
    throw std::invalid_argument("fine grid: rdt_min must be > 0");
  HammerGrid grid;
  grid.start = std::max<HammerCount>(1, rdt_min / 2);
  grid.stop = rdt_min * 2;
  grid.step = std::max<HammerCount>(1, rdt_min / 30);
  return grid;
}

void HammerGrid::validate() const {
  if (start == 0 || start > stop)
    throw std::invalid_argument("grid: need 0 < start <= stop");
  if (step == 0) throw std::invalid_argument("grid: step must be > 0");
}

std::vector<HammerCount> RdtMatrix::column(std::uint32_t iteration) const {
  std::vector<HammerCount> col(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) col[r] = value(r, iteration);
  return col;
}

HammerCount coarse_min_scan(DeviceModel& device, const HammerGrid& grid) {
  grid.validate();
  const std::uint64_t episode = device.current_episode();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const HammerCount hc = grid.point(i);
    for (const RowAddr& row : device.tested_rows())
      if (!device.hammer(row, hc, episode).empty()) return hc;
  }
  throw NoFlipInGridError("no tested row flipped at any grid hammer count up to " +
                          std::to_string(grid.stop));
}

std::optional<HammerCount> measure_row_rdt(DeviceModel& device, RowAddr row,
                                           const HammerGrid& fine_grid,
                                           std::uint64_t episode,
                                           BitflipSet* flips_out) {
  fine_grid.validate();
  for (std::size_t i = 0; i < fine_grid.size(); ++i) {
    const HammerCount hc = fine_grid.point(i);
    BitflipSet flips = device.hammer(row, hc, episode);
    if (!flips.empty()) {
      if (flips_out) *flips_out = std::move(flips);
      return hc;
    }
  }
  if (flips_out) flips_out->clear();
  return std::nullopt;
}

RdtMatrix repeated_profile(DeviceModel& device, HammerCount rdt_min,
                           std::uint32_t iterations) {
  if (iterations == 0)
    throw std::invalid_argument("profile: iterations must be > 0");
  RdtMatrix matrix;
  matrix.rows = device.tested_rows();
  matrix.iterations = iterations;
  matrix.fine_grid = HammerGrid::fine_from(rdt_min);
  matrix.values.assign(matrix.rows.size() * iterations, kAboveGrid);
  matrix.flip_log.assign(matrix.rows.size() * iterations, {});

  for (std::uint32_t it = 0; it < iterations; ++it) {
    const std::uint64_t episode = device.begin_episode();
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      BitflipSet flips;
      const auto measured =
          measure_row_rdt(device, matrix.rows[r], matrix.fine_grid, episode, &flips);
      if (measured) {
        matrix.values[r * iterations + it] = *measured;
        matrix.flip_log[r * iterations + it] = std::move(flips);
      }
    }
  }
  return matrix;
}

std::vector<HammerCount> per_iteration_min(const RdtMatrix& matrix) {
  std::vector<HammerCount> mins(matrix.iterations, 0);
  for (std::uint32_t it = 0; it < matrix.iterations; ++it) {
    HammerCount best = std::numeric_limits<HammerCount>::max();
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      const HammerCount v = matrix.value(r, it);
      if (v != kAboveGrid && v < best) best = v;
    }
    if (best == std::numeric_limits<HammerCount>::max())
      throw std::runtime_error("profile: iteration " + std::to_string(it) +
                               " has no in-grid measurement");
    mins[it] = best;
  }
  return mins;
}

CensusResult weak_row_census(const RdtMatrix& matrix) {
  CensusResult census;
  const std::vector<HammerCount> mins = per_iteration_min(matrix);
  census.census_hc = *std::max_element(mins.begin(), mins.end());

  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> locations;
  std::vector<std::uint64_t> flips_in_iteration(matrix.iterations, 0);

  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    RowFlipStats stats{matrix.rows[r], 0, 0};
    for (std::uint32_t it = 0; it < matrix.iterations; ++it) {
      const HammerCount v = matrix.value(r, it);
      if (v == kAboveGrid || v > census.census_hc) continue;
      const BitflipSet& flips = matrix.log(r, it);
      stats.iterations_with_flips += 1;
      stats.total_flips += flips.size();
      flips_in_iteration[it] += flips.size();
      for (const devsim::Bitflip& flip : flips)
        locations.emplace(flip.bank, flip.row, flip.bit);
    }
    if (stats.iterations_with_flips > 0) {
      census.weak_rows.push_back(matrix.rows[r]);
      census.per_row.push_back(stats);
    }
  }

  census.unique_bit_locations = static_cast<std::uint32_t>(locations.size());
  census.unique_rows = static_cast<std::uint32_t>(census.weak_rows.size());
  census.max_flips_in_one_iteration = static_cast<std::uint32_t>(
      *std::max_element(flips_in_iteration.begin(), flips_in_iteration.end()));
  return census;
}

RankDistribution rank_distribution(const RdtMatrix& matrix) {
  RankDistribution dist;
  dist.rows = matrix.rows;
  dist.iterations = matrix.iterations;
  dist.ranks.assign(matrix.rows.size() * matrix.iterations, 0);

  std::vector<std::size_t> order(matrix.rows.size());
  for (std::uint32_t it = 0; it < matrix.iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      HammerCount va = matrix.value(a, it);
      HammerCount vb = matrix.value(b, it);
      if (va == kAboveGrid) va = std::numeric_limits<HammerCount>::max();
      if (vb == kAboveGrid) vb = std::numeric_limits<HammerCount>::max();
      if (va != vb) return va < vb;
      return matrix.rows[a] < matrix.rows[b];
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      dist.ranks[order[pos] * matrix.iterations + it] =
          static_cast<std::uint32_t>(pos + 1);
  }

  dist.weak_rows = weak_row_census(matrix).weak_rows;
  return dist;
}

BitflipCensus bitflip_census_at(DeviceModel& device, HammerCount hammer_count,
                                std::uint32_t repetitions) {
  if (hammer_count == 0)
    throw std::invalid_argument("census: hammer_count must be > 0");
  if (repetitions == 0)
    throw std::invalid_argument("census: repetitions must be > 0");

  BitflipCensus census;
  census.hammer_count = hammer_count;
  census.flips_per_repetition.reserve(repetitions);
  census.cumulative_unique.reserve(repetitions);
  census.new_unique.reserve(repetitions);

  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  for (std::uint32_t rep = 0; rep < repetitions; ++rep) {
    const std::uint64_t episode = device.begin_episode();
    std::uint32_t flips_this_rep = 0;
    const std::uint32_t before = static_cast<std::uint32_t>(seen.size());
    for (const RowAddr& row : device.tested_rows()) {
      const BitflipSet flips = device.hammer(row, hammer_count, episode);
      flips_this_rep += static_cast<std::uint32_t>(flips.size());
      for (const devsim::Bitflip& flip : flips)
        seen.emplace(flip.bank, flip.row, flip.bit);
    }
    census.flips_per_repetition.push_back(flips_this_rep);
    census.cumulative_unique.push_back(static_cast<std::uint32_t>(seen.size()));
    census.new_unique.push_back(static_cast<std::uint32_t>(seen.size()) - before);
  }
  return census;
}

HammerCount rdt_percentile(std::span<const HammerCount> column, double q) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::invalid_argument("percentile: q must be in (0, 1)");
  if (column.empty())
    throw std::invalid_argument("percentile: empty column");

  std::vector<HammerCount> sorted(column.begin(), column.end());
  for (HammerCount& v : sorted)
    if (v == kAboveGrid) v = std::numeric_limits<HammerCount>::max();
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  // Smallest m with m >= (1-q)*n rows at or above the result; picking the
  // (n-m)-th order statistic keeps the guarantee conservative under ties.
  const auto m = static_cast<std::size_t>(
      std::ceil((1.0 - q) * static_cast<double>(n) - 1e-9));
  const HammerCount v = sorted[n - m];
  if (v == std::numeric_limits<HammerCount>::max())
    throw std::runtime_error("percentile: result falls on above-grid rows");
  return v;
}

ProfileSummary summarize(const RdtMatrix& matrix) {
  ProfileSummary summary;
  summary.rows = matrix.rows;
  summary.rdt_min_per_iteration = per_iteration_min(matrix);
  const auto [lo, hi] = std::minmax_element(summary.rdt_min_per_iteration.begin(),
                                            summary.rdt_min_per_iteration.end());
  summary.guardband_ratio = static_cast<double>(*lo) / static_cast<double>(*hi);

  const CensusResult census = weak_row_census(matrix);
  summary.weak_rows = census.weak_rows;
  summary.max_flips_in_one_iteration = census.max_flips_in_one_iteration;
  summary.unique_flip_locations = census.unique_bit_locations;
  summary.unique_flip_rows = census.unique_rows;

  summary.single_measurement = matrix.column(0);
  summary.rdt_p10 = rdt_percentile(summary.single_measurement, 0.10);
  return summary;
}

}  // namespace rdt::profiler
