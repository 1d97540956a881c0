#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rdt/rng.hpp"

namespace rdt::errmodel {

// Stochastic bitflip process: a location set L that grows by delta_l fresh
// uniform-random bit addresses every growth_period epochs (epoch 0 included,
// so L starts with delta_l locations), with n distinct locations flipping
// per epoch. An uncorrectable error is two or more distinct addresses
// landing in one single-error-correcting codeword within a scrub window.
struct ModelParams {
  std::uint32_t delta_l = 12;
  std::uint32_t n = 5;
  std::uint64_t growth_period = 1000;
  std::uint64_t scrub_interval = 1000;
  std::uint64_t flip_space_bits = 4096ull * 65536ull;  // ~2.1e6 codewords
  std::uint32_t codeword_data_bits = 128;
  std::uint32_t codeword_total_bits = 136;
  bool removal_enabled = false;
  // Remove a location from L at the end of the epoch in which it flips,
  // instead of waiting for the scrub pass.
  bool removal_at_flip = false;

  std::uint64_t codewords() const { return flip_space_bits / codeword_data_bits; }
  void validate() const;
};

// Parity bits are not part of the flip space; addresses map onto codewords
// by their data-bit position.
std::uint64_t location_to_codeword(std::uint64_t bit_address,
                                   const ModelParams& params);

struct UncorrectableEvent {
  std::uint64_t epoch = 0;  // epochs elapsed when the collision manifested
  std::uint64_t codeword = 0;
  std::vector<std::uint64_t> addresses;  // the colliding distinct addresses
};

class ModelState {
 public:
  explicit ModelState(const ModelParams& params);

  // Pre-seeded location set standing in for the epoch-0 growth; used by
  // tests that need exact collision structure.
  static ModelState with_locations(const ModelParams& params,
                                   std::vector<std::uint64_t> locations);

  std::uint64_t epoch() const { return epoch_; }
  bool failed() const { return failed_; }
  const std::optional<UncorrectableEvent>& event() const { return event_; }
  std::size_t location_count() const { return members_.size(); }
  std::vector<std::uint64_t> locations() const { return members_; }

  // Grows L at growth boundaries, draws min(n, |L|) distinct locations,
  // records them into the scrub window, and flags an uncorrectable error
  // when a codeword accumulates two distinct addresses. Stepping a failed
  // state is a no-op.
  void step_epoch(const ModelParams& params, Rng& rng);

  // Clears the scrub window; with removal enabled, every address detected
  // in the window leaves L. Returns the detected addresses.
  std::vector<std::uint64_t> scrub(const ModelParams& params);

  // True when every current location has already flipped in this window:
  // further epochs before the next growth or scrub boundary cannot change
  // the window state.
  bool window_saturated() const {
    return !failed_ && drawn_count_ == members_.size();
  }

  // Advances the epoch counter across a span whose draws provably cannot
  // alter the window (window_saturated() holds and no growth boundary lies
  // inside the span). Consumes no randomness.
  void fast_forward(std::uint64_t target_epoch);

 private:
  void grow(const ModelParams& params, Rng& rng);

  std::vector<std::uint64_t> members_;   // current L
  std::vector<std::uint32_t> stamp_;     // parallel: window id of last flip, 0 = never
  std::unordered_set<std::uint64_t> member_set_;
  std::unordered_map<std::uint64_t, std::uint64_t> window_codewords_;  // codeword -> first addr
  std::uint32_t window_id_ = 1;
  std::size_t drawn_count_ = 0;
  std::uint64_t epoch_ = 0;
  bool failed_ = false;
  bool seeded_ = false;  // with_locations consumed the epoch-0 growth
  std::optional<UncorrectableEvent> event_;
};

}  // namespace rdt::errmodel
