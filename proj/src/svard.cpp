#include "rdt/svard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rdt/rng.hpp"

namespace rdt::svard {

namespace {

std::size_t entry_index(const ThresholdMap& map, RowAddr row) {
  const auto it = std::lower_bound(
      map.entries.begin(), map.entries.end(), row,
      [](const RowThreshold& e, RowAddr r) { return e.row < r; });
  if (it == map.entries.end() || it->row != row)
    throw std::invalid_argument("threshold map: unknown row (" +
                                std::to_string(row.bank) + ", " +
                                std::to_string(row.row) + ")");
  return static_cast<std::size_t>(it - map.entries.begin());
}

}  // namespace

RowThreshold& ThresholdMap::at(RowAddr row) { return entries[entry_index(*this, row)]; }

const RowThreshold& ThresholdMap::at(RowAddr row) const {
  return entries[entry_index(*this, row)];
}

ThresholdMap assign_thresholds(const profiler::ProfileSummary& profile,
                               Policy policy, const AssignOptions& options) {
  const std::size_t n = profile.rows.size();
  if (n == 0 || profile.single_measurement.size() != n)
    throw std::invalid_argument("assign: profile lacks the single-measurement column");
  if (profile.rdt_p10 == 0)
    throw std::invalid_argument("assign: profile lacks rdt_p10");
  if (!(options.guard_margin > 0.0) || options.guard_margin >= 1.0)
    throw std::invalid_argument("assign: guard_margin must be in (0, 1)");

  HammerCount rdt_min = std::numeric_limits<HammerCount>::max();
  for (const HammerCount v : profile.single_measurement)
    if (v != profiler::kAboveGrid && v < rdt_min) rdt_min = v;
  if (rdt_min == std::numeric_limits<HammerCount>::max())
    throw std::invalid_argument("assign: single measurement has no in-grid value");

  ThresholdMap map;
  map.guarded_value = static_cast<HammerCount>(std::floor(
      (1.0 - options.guard_margin) * static_cast<double>(rdt_min) + 1e-9));
  if (map.guarded_value == 0) map.guarded_value = 1;
  map.relaxed_value = profile.rdt_p10;

  map.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    map.entries.push_back(RowThreshold{profile.rows[i], map.guarded_value,
                                       Bin::guarded, 0});

  if (policy == Policy::svard_two_bin) {
    // Order rows by their single measurement (above-grid rows last).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
      const HammerCount v = profile.single_measurement[i];
      return v == profiler::kAboveGrid ? std::numeric_limits<HammerCount>::max() : v;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (key(a) != key(b)) return key(a) < key(b);
      return profile.rows[a] < profile.rows[b];
    });

    std::size_t strictly_below = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (key(i) < profile.rdt_p10) ++strictly_below;

    const auto target = static_cast<std::size_t>(std::llround(
        (options.tail_fraction + options.extra_demotion_fraction) *
        static_cast<double>(n)));
    const std::size_t guarded_count = std::min(n, std::max(strictly_below, target));

    for (std::size_t pos = guarded_count; pos < n; ++pos) {
      RowThreshold& entry = map.entries[order[pos]];
      entry.threshold = map.relaxed_value;
      entry.bin = Bin::relaxed;
    }
  }

  if (map.guarded_value >= map.relaxed_value && policy == Policy::svard_two_bin)
    throw std::invalid_argument("assign: guarded threshold must stay below relaxed");
  std::sort(map.entries.begin(), map.entries.end(),
            [](const RowThreshold& a, const RowThreshold& b) { return a.row < b.row; });
  return map;
}

void demote_row(ThresholdMap& map, RowAddr row) {
  RowThreshold& entry = map.at(row);
  entry.threshold = std::max<HammerCount>(1, entry.threshold / 2);
  entry.demotions += 1;
}

std::vector<std::uint32_t> generate_trace(const TraceSpec& spec,
                                          const ThresholdMap& map) {
  const std::size_t n = map.entries.size();
  if (n == 0) throw std::invalid_argument("trace: empty threshold map");
  if (spec.length == 0) throw std::invalid_argument("trace: length must be > 0");

  std::vector<std::uint32_t> trace;
  trace.reserve(spec.length);
  Rng rng(spec.seed);

  switch (spec.kind) {
    case TraceSpec::Kind::uniform: {
      for (std::uint64_t i = 0; i < spec.length; ++i)
        trace.push_back(static_cast<std::uint32_t>(rng.uniform_below(n)));
      break;
    }
    case TraceSpec::Kind::single_row_hammer: {
      std::uint32_t idx = 0;
      if (spec.target) {
        idx = static_cast<std::uint32_t>(entry_index(map, *spec.target));
      } else {
        for (std::uint32_t i = 1; i < n; ++i)
          if (map.entries[i].threshold < map.entries[idx].threshold) idx = i;
      }
      trace.assign(spec.length, idx);
      break;
    }
    case TraceSpec::Kind::double_sided: {
      // Bursts of alternating activations around a victim; adjacency in the
      // map's row order stands in for physical adjacency.
      if (n < 3)
        throw std::invalid_argument("trace: double_sided needs at least 3 rows");
      constexpr std::uint64_t kBurst = 1000;
      std::uint64_t produced = 0;
      while (produced < spec.length) {
        const auto victim =
            1 + static_cast<std::uint32_t>(rng.uniform_below(n - 2));
        const std::uint64_t burst = std::min(kBurst, spec.length - produced);
        for (std::uint64_t i = 0; i < burst; ++i)
          trace.push_back(i % 2 == 0 ? victim - 1 : victim + 1);
        produced += burst;
      }
      break;
    }
    case TraceSpec::Kind::zipf: {
      std::vector<double> cdf(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_s);
        cdf[i] = total;
      }
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        const double u = rng.uniform01() * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        trace.push_back(static_cast<std::uint32_t>(it - cdf.begin()));
      }
      break;
    }
  }
  return trace;
}

MitigationStats simulate_para(std::span<const std::uint32_t> trace,
                              const ThresholdMap& map, double epsilon,
                              std::uint64_t seed) {
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw std::invalid_argument("para: epsilon must be in (0, 1)");
  const double log_eps = std::log(epsilon);

  std::vector<double> refresh_prob(map.entries.size());
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const HammerCount threshold = map.entries[i].threshold;
    if (threshold == 0) throw std::invalid_argument("para: zero threshold");
    refresh_prob[i] = -std::expm1(log_eps / static_cast<double>(threshold));
  }

  MitigationStats stats;
  stats.total_activations = trace.size();
  Rng rng(seed);
  for (const std::uint32_t idx : trace) {
    const double u = rng.uniform01();
    if (u < refresh_prob[idx]) ++stats.preventive_refreshes;
  }
  stats.refresh_rate_per_kilo_act =
      1000.0 * static_cast<double>(stats.preventive_refreshes) /
      static_cast<double>(stats.total_activations);
  return stats;
}

MitigationStats simulate_chronus(std::span<const std::uint32_t> trace,
                                 const ThresholdMap& map) {
  std::vector<HammerCount> trigger(map.entries.size());
  for (std::size_t i = 0; i < map.entries.size(); ++i)
    trigger[i] = std::max<HammerCount>(1, map.entries[i].threshold / 2);

  MitigationStats stats;
  stats.total_activations = trace.size();
  std::vector<HammerCount> counter(map.entries.size(), 0);
  for (const std::uint32_t idx : trace) {
    const HammerCount c = ++counter[idx];
    if (c > stats.max_counter_seen) stats.max_counter_seen = c;
    if (c >= trigger[idx]) {
      ++stats.preventive_refreshes;
      counter[idx] = 0;
    }
  }
  stats.refresh_rate_per_kilo_act =
      1000.0 * static_cast<double>(stats.preventive_refreshes) /
      static_cast<double>(stats.total_activations);
  return stats;
}

std::string to_string(TraceSpec::Kind kind) {
  switch (kind) {
    case TraceSpec::Kind::uniform: return "uniform";
    case TraceSpec::Kind::single_row_hammer: return "single-row-hammer";
    case TraceSpec::Kind::double_sided: return "double-sided";
    case TraceSpec::Kind::zipf: return "zipf";
  }
  return "unknown";
}

TraceSpec::Kind trace_kind_from_string(const std::string& name) {
  if (name == "uniform") return TraceSpec::Kind::uniform;
  if (name == "single-row-hammer") return TraceSpec::Kind::single_row_hammer;
  if (name == "double-sided") return TraceSpec::Kind::double_sided;
  if (name == "zipf") return TraceSpec::Kind::zipf;
  throw std::invalid_argument("trace: unknown generator kind '" + name + "'");
}

}  // namespace rdt::svard
