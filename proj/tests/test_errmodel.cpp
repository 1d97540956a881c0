#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "rdt/errmodel.hpp"
#include "rdt/montecarlo.hpp"
#include "rdt/rng.hpp"

using namespace rdt;
using namespace rdt::errmodel;

namespace {

ModelParams tiny_space_params(std::uint32_t delta_l, std::uint32_t n,
                              std::uint64_t codewords) {
  ModelParams params;
  params.delta_l = delta_l;
  params.n = n;
  params.flip_space_bits = codewords * params.codeword_data_bits;
  return params;
}

}  // namespace

TEST_CASE("model parameter validation") {
  ModelParams params;
  params.delta_l = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = ModelParams{};
  params.n = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = ModelParams{};
  params.flip_space_bits = 1000;  // not a multiple of 128
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = ModelParams{};
  params.scrub_interval = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = ModelParams{};
  params.codeword_total_bits = 100;  // below the data bits
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  CHECK_NOTHROW(ModelParams{}.validate());
}

TEST_CASE("addresses map onto codewords by data-bit position") {
  const ModelParams params;
  CHECK(location_to_codeword(0, params) == 0);
  CHECK(location_to_codeword(127, params) == 0);
  CHECK(location_to_codeword(128, params) == 1);
  CHECK(location_to_codeword(params.flip_space_bits - 1, params) ==
        params.codewords() - 1);
  CHECK(params.codewords() == 2097152);
  CHECK_THROWS_AS(location_to_codeword(params.flip_space_bits, params),
                  std::invalid_argument);
}

TEST_CASE("two same-codeword locations with n=2 fail in the first epoch") {
  const ModelParams params = tiny_space_params(2, 2, 2);
  ModelState state = ModelState::with_locations(params, {3, 70});
  Rng rng(1);
  state.step_epoch(params, rng);
  CHECK(state.failed());
  CHECK(state.epoch() == 1);
  REQUIRE(state.event().has_value());
  CHECK(state.event()->epoch == 1);
  CHECK(state.event()->codeword == 0);
  CHECK(state.event()->addresses == std::vector<std::uint64_t>{3, 70});
}

TEST_CASE("locations in different codewords never collide") {
  const ModelParams params = tiny_space_params(2, 2, 2);
  // Growth disabled within the run by a long growth period.
  ModelParams p = params;
  p.growth_period = 1u << 30;
  ModelState state = ModelState::with_locations(p, {3, 130});
  Rng rng(2);
  for (int e = 0; e < 5000; ++e) {
    state.step_epoch(p, rng);
    if (state.epoch() % p.scrub_interval == 0) state.scrub(p);
  }
  CHECK_FALSE(state.failed());
  CHECK(state.epoch() == 5000);
}

TEST_CASE("stepping a failed state is a no-op") {
  const ModelParams params = tiny_space_params(2, 2, 2);
  ModelState state = ModelState::with_locations(params, {3, 70});
  Rng rng(3);
  state.step_epoch(params, rng);
  REQUIRE(state.failed());
  const auto epoch = state.epoch();
  state.step_epoch(params, rng);
  CHECK(state.epoch() == epoch);
  CHECK(state.failed());
}

TEST_CASE("location set grows by delta_l per growth period") {
  ModelParams params;
  params.delta_l = 7;
  params.n = 2;
  params.growth_period = 50;
  params.scrub_interval = 25;
  ModelState state(params);
  Rng rng(11);

  auto expect_size = [&](std::uint64_t completed_epochs) {
    return 7ull * (1 + (completed_epochs - 1) / 50);
  };
  const std::vector<std::uint64_t> probes{1, 49, 50, 51, 100, 101, 249, 250};
  std::uint64_t done = 0;
  for (const std::uint64_t target : probes) {
    while (done < target) {
      state.step_epoch(params, rng);
      ++done;
      if (state.epoch() % params.scrub_interval == 0) state.scrub(params);
    }
    REQUIRE_FALSE(state.failed());
    CHECK(state.location_count() == expect_size(target));
  }

  // Members are distinct addresses inside the flip space.
  const auto locations = state.locations();
  const std::set<std::uint64_t> unique(locations.begin(), locations.end());
  CHECK(unique.size() == locations.size());
  for (const auto addr : locations) CHECK(addr < params.flip_space_bits);
}

TEST_CASE("repeated flips of one address count once per codeword") {
  const ModelParams params = tiny_space_params(1, 1, 2);
  ModelParams p = params;
  p.growth_period = 1u << 30;
  ModelState state = ModelState::with_locations(p, {64});
  Rng rng(5);
  for (int e = 0; e < 3000; ++e) {
    state.step_epoch(p, rng);
    if (state.epoch() % p.scrub_interval == 0) state.scrub(p);
  }
  CHECK_FALSE(state.failed());
}

TEST_CASE("per-epoch scrubbing makes n=1 collisions impossible") {
  ModelParams params = tiny_space_params(2, 1, 2);
  params.scrub_interval = 1;
  params.growth_period = 1u << 30;
  // A same-codeword pair: without scrubbing this would eventually fail.
  ModelState state = ModelState::with_locations(params, {3, 70});
  Rng rng(6);
  for (int e = 0; e < 10000; ++e) {
    state.step_epoch(params, rng);
    state.scrub(params);
  }
  CHECK_FALSE(state.failed());
}

TEST_CASE("scrub clears the window and removal empties the set") {
  ModelParams params = tiny_space_params(3, 3, 1000);
  params.growth_period = 100;
  params.scrub_interval = 100;

  SUBCASE("removal disabled leaves the set intact") {
    ModelState state = ModelState::with_locations(params, {1, 200, 400});
    Rng rng(7);
    for (int e = 0; e < 100; ++e) state.step_epoch(params, rng);
    const auto detected = state.scrub(params);
    CHECK(detected == std::vector<std::uint64_t>{1, 200, 400});
    CHECK(state.location_count() == 3);
  }

  SUBCASE("removal empties the set until the next growth") {
    params.removal_enabled = true;
    ModelState state = ModelState::with_locations(params, {1, 200, 400});
    Rng rng(8);
    for (int e = 0; e < 100; ++e) state.step_epoch(params, rng);
    const auto detected = state.scrub(params);
    CHECK(detected == std::vector<std::uint64_t>{1, 200, 400});
    CHECK(state.location_count() == 0);

    state.step_epoch(params, rng);  // epoch 100: growth refills
    CHECK(state.location_count() == 3);
  }

  SUBCASE("removal at flip time shrinks the set before the scrub") {
    params.removal_enabled = true;
    params.removal_at_flip = true;
    ModelState state = ModelState::with_locations(params, {1, 200, 400});
    Rng rng(9);
    state.step_epoch(params, rng);  // n=3 draws all three, removed at epoch end
    CHECK(state.location_count() == 0);
    CHECK_FALSE(state.failed());
  }
}

TEST_CASE("re-added addresses never collide with themselves") {
  // removal_at_flip drops a flipped address from L; per-epoch growth can
  // re-draw that same address inside the still-open window. Every reported
  // collision must involve two distinct addresses.
  ModelParams params = tiny_space_params(1, 1, 1);  // single codeword
  params.growth_period = 1;
  params.scrub_interval = 1000;
  params.removal_enabled = true;
  params.removal_at_flip = true;

  int failures = 0;
  for (std::uint32_t t = 0; t < 400; ++t) {
    ModelState state(params);
    Rng rng = Rng::stream(31337, t);
    for (int e = 0; e < 64 && !state.failed(); ++e) state.step_epoch(params, rng);
    if (state.failed()) {
      ++failures;
      REQUIRE(state.event().has_value());
      const auto& addresses = state.event()->addresses;
      REQUIRE(addresses.size() == 2);
      CHECK(addresses[0] != addresses[1]);
    }
  }
  CHECK(failures > 0);  // two distinct addresses in one codeword do collide
}

TEST_CASE("first-window failure frequency matches the analytic oracle") {
  ModelParams params = tiny_space_params(12, 3, 10000);
  params.growth_period = 100;
  params.scrub_interval = 100;

  const double expected = montecarlo::analytic_window_oracle(params, 0);
  const std::uint32_t trials = 50000;
  std::uint32_t failures = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    ModelState state(params);
    Rng rng = Rng::stream(424242, t);
    for (std::uint64_t e = 0; e < params.scrub_interval && !state.failed(); ++e)
      state.step_epoch(params, rng);
    if (state.failed()) ++failures;
  }
  const double freq = static_cast<double>(failures) / trials;
  const double sigma = std::sqrt(expected * (1.0 - expected) / trials);
  const double tolerance = std::max(0.10 * expected, 3.0 * sigma);
  CHECK(std::abs(freq - expected) <= tolerance);
}
