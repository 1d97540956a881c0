#include "rdt/devsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace rdt::devsim {

namespace {

HammerCount round_half_up(double x) {
  const double r = std::floor(x + 0.5);
  if (r < 1.0) return 1;
  return static_cast<HammerCount>(r);
}

}  // namespace

std::uint32_t ChipGeometry::tested_rows_per_bank() const {
  auto n = static_cast<std::uint32_t>(
      std::llround(tested_row_fraction * static_cast<double>(rows_per_bank)));
  if (n == 0) n = 1;
  if (n > rows_per_bank) n = rows_per_bank;
  return n;
}

void ChipGeometry::validate() const {
  if (banks == 0) throw std::invalid_argument("geometry: banks must be > 0");
  if (rows_per_bank == 0)
    throw std::invalid_argument("geometry: rows_per_bank must be > 0");
  if (bits_per_row == 0)
    throw std::invalid_argument("geometry: bits_per_row must be > 0");
  if (!(tested_row_fraction > 0.0) || tested_row_fraction > 1.0)
    throw std::invalid_argument("geometry: tested_row_fraction must be in (0, 1]");
}

ConditionPreset ConditionPreset::at(int temperature_c, int t_aggon_ns) {
  double temp_scale = 0.0;
  switch (temperature_c) {
    case 50: temp_scale = 1.0; break;
    case 65: temp_scale = 0.9; break;
    case 80: temp_scale = 0.8; break;
    default:
      throw std::invalid_argument("preset: temperature must be one of {50, 65, 80}");
  }
  double aggon_scale = 0.0;
  switch (t_aggon_ns) {
    case 35: aggon_scale = 1.0; break;
    case 300: aggon_scale = 0.85; break;
    case 1000: aggon_scale = 0.7; break;
    default:
      throw std::invalid_argument("preset: t_aggon must be one of {35, 300, 1000} ns");
  }
  return ConditionPreset{temperature_c, t_aggon_ns, temp_scale * aggon_scale};
}

void ConditionPreset::validate() const {
  if (temperature_c != 50 && temperature_c != 65 && temperature_c != 80)
    throw std::invalid_argument("preset: temperature must be one of {50, 65, 80}");
  if (t_aggon_ns != 35 && t_aggon_ns != 300 && t_aggon_ns != 1000)
    throw std::invalid_argument("preset: t_aggon must be one of {35, 300, 1000} ns");
  if (!(rdt_scale > 0.0))
    throw std::invalid_argument("preset: rdt_scale must be > 0");
  if (temperature_c == 50 && t_aggon_ns == 35 && rdt_scale != 1.0)
    throw std::invalid_argument("preset: the (35 ns, 50 C) reference point must have rdt_scale 1.0");
}

void RowDistribution::validate() const {
  if (!(log_median > 0.0))
    throw std::invalid_argument("distribution: log_median must be > 0");
  if (sigma_log < 0.0)
    throw std::invalid_argument("distribution: sigma_log must be >= 0");
  if (clip_min == 0 || clip_min > clip_max)
    throw std::invalid_argument("distribution: need 0 < clip_min <= clip_max");
  if (!(weak_rdt_low >= 1.0) || weak_rdt_low > weak_rdt_high)
    throw std::invalid_argument("distribution: need 1 <= weak_rdt_low <= weak_rdt_high");
  if (jitter_half_width < 0.0 || jitter_half_width >= 1.0)
    throw std::invalid_argument("distribution: jitter_half_width must be in [0, 1)");
  if (cells_per_row == 0)
    throw std::invalid_argument("distribution: cells_per_row must be >= 1");
  if (!(extra_multiplier_low > 1.0) || extra_multiplier_low > extra_multiplier_high)
    throw std::invalid_argument("distribution: need 1 < extra_multiplier_low <= extra_multiplier_high");
}

DeviceSpec DeviceSpec::worst_case() {
  DeviceSpec spec;
  spec.geometry = ChipGeometry{1, 4096, 65536, 1.0 / 16.0};
  spec.distribution = RowDistribution{};  // defaults are the calibrated values
  spec.preset = ConditionPreset::reference();
  spec.seed = 20240611;
  return spec;
}

void DeviceSpec::validate() const {
  geometry.validate();
  distribution.validate();
  preset.validate();
}

DeviceModel::DeviceModel(const DeviceSpec& spec)
    : geometry_(spec.geometry),
      preset_(spec.preset),
      seed_(spec.seed),
      episode_rng_(Rng::stream(spec.seed, 1)) {
  spec.validate();
  const RowDistribution& dist = spec.distribution;
  Rng build_rng = Rng::stream(spec.seed, 0);

  const std::uint32_t tested_per_bank = geometry_.tested_rows_per_bank();
  const double log_mu = std::log(dist.log_median);

  std::vector<std::pair<RowAddr, RowModel>> table;
  table.reserve(static_cast<std::size_t>(geometry_.banks) * tested_per_bank);

  for (std::uint32_t bank = 0; bank < geometry_.banks; ++bank) {
    // Fixed tested subset per device seed: partial Fisher-Yates sample.
    std::vector<std::uint32_t> rows(geometry_.rows_per_bank);
    std::iota(rows.begin(), rows.end(), 0u);
    for (std::uint32_t i = 0; i < tested_per_bank; ++i) {
      const auto j = i + build_rng.uniform_below(geometry_.rows_per_bank - i);
      std::swap(rows[i], rows[j]);
    }

    const std::uint32_t weak_count = std::min(dist.weak_rows_per_bank, tested_per_bank);
    for (std::uint32_t i = 0; i < tested_per_bank; ++i) {
      RowModel model;
      model.jitter_half_width = dist.jitter_half_width;
      if (i < weak_count) {
        // Weak-row ladder across [weak_rdt_low, weak_rdt_high].
        const double t = weak_count > 1
                             ? static_cast<double>(i) / static_cast<double>(weak_count - 1)
                             : 0.0;
        model.base_rdt = round_half_up(dist.weak_rdt_low +
                                       t * (dist.weak_rdt_high - dist.weak_rdt_low));
      } else {
        double x = build_rng.lognormal(log_mu, dist.sigma_log);
        x = std::clamp(x, static_cast<double>(dist.clip_min),
                       static_cast<double>(dist.clip_max));
        model.base_rdt = round_half_up(x);
      }

      model.cells.reserve(dist.cells_per_row);
      std::unordered_set<std::uint32_t> used_bits;
      for (std::uint32_t c = 0; c < dist.cells_per_row; ++c) {
        std::uint32_t bit;
        do {
          bit = static_cast<std::uint32_t>(build_rng.uniform_below(geometry_.bits_per_row));
        } while (!used_bits.insert(bit).second);
        const double mult = c == 0 ? 1.0
                                   : build_rng.uniform_real(dist.extra_multiplier_low,
                                                            dist.extra_multiplier_high);
        model.cells.push_back(CellFault{bit, mult});
      }
      table.emplace_back(RowAddr{bank, rows[i]}, std::move(model));
    }
  }

  std::sort(table.begin(), table.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  tested_rows_.reserve(table.size());
  row_models_.reserve(table.size());
  for (auto& [addr, model] : table) {
    tested_rows_.push_back(addr);
    row_models_.push_back(std::move(model));
  }
  realized_.assign(tested_rows_.size(), 0);
}

DeviceModel::DeviceModel(ChipGeometry geometry, ConditionPreset preset,
                         std::vector<std::pair<RowAddr, RowModel>> tested_rows,
                         std::uint64_t seed)
    : geometry_(geometry),
      preset_(preset),
      seed_(seed),
      episode_rng_(Rng::stream(seed, 1)) {
  geometry_.validate();
  preset_.validate();
  std::sort(tested_rows.begin(), tested_rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [addr, model] : tested_rows) {
    if (addr.bank >= geometry_.banks || addr.row >= geometry_.rows_per_bank)
      throw std::invalid_argument("device: tested row outside geometry");
    if (model.base_rdt == 0)
      throw std::invalid_argument("device: base_rdt must be > 0");
    if (model.jitter_half_width < 0.0 || model.jitter_half_width >= 1.0)
      throw std::invalid_argument("device: jitter_half_width must be in [0, 1)");
    for (const CellFault& cell : model.cells)
      if (cell.bit_offset >= geometry_.bits_per_row)
        throw std::invalid_argument("device: cell bit_offset outside row");
    tested_rows_.push_back(addr);
    row_models_.push_back(std::move(model));
  }
  realized_.assign(tested_rows_.size(), 0);
}

bool DeviceModel::is_tested(RowAddr addr) const {
  return std::binary_search(tested_rows_.begin(), tested_rows_.end(), addr);
}

std::size_t DeviceModel::tested_index(RowAddr addr) const {
  const auto it = std::lower_bound(tested_rows_.begin(), tested_rows_.end(), addr);
  if (it == tested_rows_.end() || *it != addr)
    throw std::invalid_argument("device: row (" + std::to_string(addr.bank) + ", " +
                                std::to_string(addr.row) + ") is not a tested row");
  return static_cast<std::size_t>(it - tested_rows_.begin());
}

const RowModel& DeviceModel::row_model(RowAddr addr) const {
  return row_models_[tested_index(addr)];
}

std::uint64_t DeviceModel::begin_episode() {
  for (std::size_t i = 0; i < row_models_.size(); ++i) {
    const RowModel& model = row_models_[i];
    const double u = episode_rng_.uniform_real(1.0 - model.jitter_half_width,
                                               1.0 + model.jitter_half_width);
    realized_[i] = round_half_up(static_cast<double>(model.base_rdt) * u *
                                 preset_.rdt_scale);
  }
  return episodes_begun_++;
}

std::uint64_t DeviceModel::current_episode() const {
  if (episodes_begun_ == 0)
    throw std::logic_error("device: no episode begun");
  return episodes_begun_ - 1;
}

void DeviceModel::check_episode(std::uint64_t episode) const {
  if (episode != current_episode())
    throw std::invalid_argument("device: episode " + std::to_string(episode) +
                                " is not the current episode");
}

BitflipSet DeviceModel::hammer(RowAddr victim, HammerCount hammer_count,
                               std::uint64_t episode) const {
  if (hammer_count == 0)
    throw std::invalid_argument("device: hammer_count must be > 0");
  const std::size_t idx = tested_index(victim);
  check_episode(episode);

  const HammerCount realized = realized_[idx];
  BitflipSet flips;
  for (const CellFault& cell : row_models_[idx].cells) {
    const HammerCount threshold =
        round_half_up(static_cast<double>(realized) * cell.threshold_multiplier);
    if (hammer_count >= threshold)
      flips.push_back(Bitflip{victim.bank, victim.row, cell.bit_offset});
  }
  std::sort(flips.begin(), flips.end());
  return flips;
}

HammerCount DeviceModel::oracle_true_rdt(RowAddr victim,
                                         std::uint64_t episode) const {
  const std::size_t idx = tested_index(victim);
  check_episode(episode);
  return realized_[idx];
}

}  // namespace rdt::devsim
