#include "rdt/errmodel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rdt::errmodel {

void ModelParams::validate() const {
  if (delta_l == 0) throw std::invalid_argument("model: delta_l must be >= 1");
  if (n == 0) throw std::invalid_argument("model: n must be >= 1");
  if (growth_period == 0)
    throw std::invalid_argument("model: growth_period must be >= 1");
  if (scrub_interval == 0)
    throw std::invalid_argument("model: scrub_interval must be >= 1");
  if (codeword_data_bits == 0)
    throw std::invalid_argument("model: codeword_data_bits must be > 0");
  if (codeword_total_bits < codeword_data_bits)
    throw std::invalid_argument("model: codeword_total_bits must be >= codeword_data_bits");
  if (flip_space_bits == 0 || flip_space_bits % codeword_data_bits != 0)
    throw std::invalid_argument("model: flip_space_bits must be a positive multiple of codeword_data_bits");
}

std::uint64_t location_to_codeword(std::uint64_t bit_address,
                                   const ModelParams& params) {
  if (bit_address >= params.flip_space_bits)
    throw std::invalid_argument("model: bit address " + std::to_string(bit_address) +
                                " outside flip space");
  return bit_address / params.codeword_data_bits;
}

ModelState::ModelState(const ModelParams& params) {
  params.validate();
}

ModelState ModelState::with_locations(const ModelParams& params,
                                      std::vector<std::uint64_t> locations) {
  ModelState state(params);
  for (std::uint64_t addr : locations) {
    if (addr >= params.flip_space_bits)
      throw std::invalid_argument("model: location outside flip space");
    if (!state.member_set_.insert(addr).second)
      throw std::invalid_argument("model: duplicate location");
    state.members_.push_back(addr);
    state.stamp_.push_back(0);
  }
  state.seeded_ = true;
  return state;
}

void ModelState::grow(const ModelParams& params, Rng& rng) {
  if (members_.size() + params.delta_l > params.flip_space_bits)
    throw std::runtime_error("model: flip space exhausted");
  for (std::uint32_t i = 0; i < params.delta_l; ++i) {
    std::uint64_t addr;
    do {
      addr = rng.uniform_below(params.flip_space_bits);
    } while (!member_set_.insert(addr).second);
    members_.push_back(addr);
    stamp_.push_back(0);
  }
}

void ModelState::step_epoch(const ModelParams& params, Rng& rng) {
  if (failed_) return;

  if (epoch_ % params.growth_period == 0) {
    // The epoch-0 growth is the initial population of L; with_locations
    // supplies it directly.
    if (epoch_ != 0 || !seeded_) grow(params, rng);
  }

  const std::size_t m = members_.size();
  const std::size_t k = std::min<std::size_t>(params.n, m);
  for (std::size_t j = 0; j < k && !failed_; ++j) {
    const std::size_t pick = j + rng.uniform_below(m - j);
    std::swap(members_[j], members_[pick]);
    std::swap(stamp_[j], stamp_[pick]);
    if (stamp_[j] == window_id_) continue;  // already flipped this window
    stamp_[j] = window_id_;
    ++drawn_count_;
    const std::uint64_t addr = members_[j];
    const std::uint64_t codeword = addr / params.codeword_data_bits;
    auto [it, inserted] = window_codewords_.try_emplace(codeword, addr);
    // A removed address can re-enter L through growth and flip again within
    // the same window; that is still one distinct address, not a collision.
    if (!inserted && it->second != addr) {
      failed_ = true;
      UncorrectableEvent ev;
      ev.epoch = epoch_ + 1;
      ev.codeword = codeword;
      ev.addresses = {it->second, addr};
      std::sort(ev.addresses.begin(), ev.addresses.end());
      event_ = std::move(ev);
    }
  }

  if (!failed_ && params.removal_enabled && params.removal_at_flip) {
    // Swap-remove everything stamped this window; the epoch's draws are the
    // first k slots plus anything stamped earlier in the window.
    std::size_t i = 0;
    while (i < members_.size()) {
      if (stamp_[i] == window_id_) {
        member_set_.erase(members_[i]);
        members_[i] = members_.back();
        stamp_[i] = stamp_.back();
        members_.pop_back();
        stamp_.pop_back();
      } else {
        ++i;
      }
    }
    drawn_count_ = 0;
  }

  ++epoch_;
}

std::vector<std::uint64_t> ModelState::scrub(const ModelParams& params) {
  std::vector<std::uint64_t> detected;
  detected.reserve(drawn_count_);
  for (std::size_t i = 0; i < members_.size(); ++i)
    if (stamp_[i] == window_id_) detected.push_back(members_[i]);
  std::sort(detected.begin(), detected.end());

  if (params.removal_enabled && !params.removal_at_flip) {
    std::size_t keep = 0;
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (stamp_[i] == window_id_) {
        member_set_.erase(members_[i]);
      } else {
        members_[keep] = members_[i];
        stamp_[keep] = stamp_[i];
        ++keep;
      }
    }
    members_.resize(keep);
    stamp_.resize(keep);
  }

  window_codewords_.clear();
  ++window_id_;
  drawn_count_ = 0;
  return detected;
}

void ModelState::fast_forward(std::uint64_t target_epoch) {
  if (!window_saturated())
    throw std::logic_error("model: fast_forward requires a saturated window");
  if (target_epoch < epoch_)
    throw std::logic_error("model: fast_forward cannot rewind");
  epoch_ = target_epoch;
}

}  // namespace rdt::errmodel
