#include "rdt/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rdt/errors.hpp"
#include "rdt/hash.hpp"

namespace rdt::montecarlo {

double epoch_hours(const EpochClock& clock) {
  if (!(clock.seconds_per_hammer > 0.0))
    throw std::invalid_argument("clock: seconds_per_hammer must be > 0");
  return static_cast<double>(clock.rows_hammered_per_epoch) *
         static_cast<double>(clock.hammer_count) * clock.seconds_per_hammer /
         3600.0;
}

namespace {

struct TrialOutcome {
  TrialResult result;
  std::optional<UncorrectableEvent> event;
};

TrialOutcome run_one(const ModelParams& params, std::uint64_t horizon, Rng rng) {
  errmodel::ModelState state(params);
  while (!state.failed() && state.epoch() < horizon) {
    if (state.window_saturated() && state.epoch() % params.growth_period != 0) {
      // Every location already flipped this window, so epochs up to the next
      // growth or scrub boundary cannot change the outcome.
      const std::uint64_t e = state.epoch();
      const std::uint64_t next_scrub =
          (e / params.scrub_interval + 1) * params.scrub_interval;
      const std::uint64_t next_growth =
          (e / params.growth_period + 1) * params.growth_period;
      state.fast_forward(std::min({next_scrub, next_growth, horizon}));
    } else {
      state.step_epoch(params, rng);
    }
    if (state.failed()) break;
    if (state.epoch() % params.scrub_interval == 0) state.scrub(params);
  }

  TrialOutcome outcome;
  if (state.failed()) {
    outcome.result.first_failure_epoch = state.epoch();
    outcome.event = state.event();
  }
  return outcome;
}

FailureCurve build_curve(const std::vector<TrialResult>& trials,
                         std::uint64_t horizon, std::uint64_t scrub_interval) {
  std::vector<std::uint64_t> samples;
  const std::uint64_t boundaries = horizon / scrub_interval;
  const std::uint64_t stride = std::max<std::uint64_t>(1, boundaries / 4096);
  for (std::uint64_t w = stride; w <= boundaries; w += stride)
    samples.push_back(w * scrub_interval);
  // Log-spaced grid so early windows stay visible on long horizons.
  const int log_points = 64;
  for (int i = 0; i <= log_points; ++i) {
    const double x = std::exp(std::log(static_cast<double>(horizon)) * i / log_points);
    samples.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(x)));
  }
  samples.push_back(horizon);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

  std::vector<std::uint64_t> failures;
  failures.reserve(trials.size());
  for (const TrialResult& t : trials)
    if (t.first_failure_epoch) failures.push_back(*t.first_failure_epoch);
  std::sort(failures.begin(), failures.end());

  FailureCurve curve;
  curve.epochs = std::move(samples);
  curve.p_fail_by.reserve(curve.epochs.size());
  for (const std::uint64_t e : curve.epochs) {
    const auto it = std::upper_bound(failures.begin(), failures.end(), e);
    curve.p_fail_by.push_back(static_cast<double>(it - failures.begin()) /
                              static_cast<double>(trials.size()));
  }
  return curve;
}

}  // namespace

EnsembleResult run_trials(const ModelParams& params, std::uint32_t trials,
                          std::uint64_t horizon, std::uint64_t seed,
                          std::uint32_t threads) {
  params.validate();
  if (trials == 0) throw std::invalid_argument("ensemble: trials must be > 0");
  if (horizon < params.scrub_interval)
    throw std::invalid_argument("ensemble: horizon must be >= scrub_interval");

  std::vector<TrialOutcome> outcomes(trials);
  const std::uint32_t workers =
      std::max<std::uint32_t>(1, std::min(threads, trials));

  if (workers == 1) {
    for (std::uint32_t t = 0; t < trials; ++t)
      outcomes[t] = run_one(params, horizon, Rng::stream(seed, t));
  } else {
    std::atomic<std::uint32_t> next{0};
    auto work = [&] {
      for (;;) {
        const std::uint32_t t = next.fetch_add(1, std::memory_order_relaxed);
        if (t >= trials) return;
        outcomes[t] = run_one(params, horizon, Rng::stream(seed, t));
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::uint32_t i = 0; i + 1 < workers; ++i) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();
  }

  EnsembleResult result;
  result.horizon = horizon;
  result.trials.reserve(trials);
  for (std::uint32_t t = 0; t < trials; ++t) {
    result.trials.push_back(outcomes[t].result);
    if (outcomes[t].event)
      result.events.push_back(TrialEvent{t, *outcomes[t].event});
  }
  result.curve = build_curve(result.trials, horizon, params.scrub_interval);
  return result;
}

MttueEstimate estimate_mttue(std::span<const TrialResult> results,
                             std::uint64_t horizon, std::uint64_t scrub_interval,
                             const EpochClock& clock) {
  if (results.empty())
    throw std::invalid_argument("estimate: need at least one trial");
  if (scrub_interval == 0)
    throw std::invalid_argument("estimate: scrub_interval must be > 0");

  std::uint64_t failures = 0;
  double failed_epoch_sum = 0.0;
  double windows_at_risk = 0.0;
  const double censored_windows =
      std::ceil(static_cast<double>(horizon) / static_cast<double>(scrub_interval));
  double censored = 0.0;

  for (const TrialResult& t : results) {
    if (t.first_failure_epoch) {
      ++failures;
      failed_epoch_sum += static_cast<double>(*t.first_failure_epoch);
      windows_at_risk += std::ceil(static_cast<double>(*t.first_failure_epoch) /
                                   static_cast<double>(scrub_interval));
    } else {
      censored += 1.0;
      windows_at_risk += censored_windows;
    }
  }

  if (failures == 0)
    throw InsufficientFailuresError(
        "no trial failed within the horizon; extend the horizon");

  MttueEstimate estimate;
  estimate.failures = failures;
  estimate.trials = results.size();
  estimate.censored_fraction = censored / static_cast<double>(results.size());

  if (censored == 0.0) {
    estimate.method = MttueMethod::empirical_mean;
    estimate.mttue_epochs = failed_epoch_sum / static_cast<double>(results.size());
  } else {
    estimate.method = MttueMethod::hazard_extrapolated;
    const double hazard = static_cast<double>(failures) / windows_at_risk;
    const double tail = static_cast<double>(horizon) +
                        static_cast<double>(scrub_interval) / hazard;
    estimate.mttue_epochs =
        (failed_epoch_sum + censored * tail) / static_cast<double>(results.size());
  }
  estimate.mttue_hours = estimate.mttue_epochs * epoch_hours(clock);
  return estimate;
}

namespace {

// Locations during window w, assuming growth boundaries align with window
// starts (exact when growth_period is a multiple of the scrub interval or
// lies beyond the horizon).
double locations_in_window(const ModelParams& params, std::uint64_t w) {
  const std::uint64_t growths = (w * params.scrub_interval) / params.growth_period + 1;
  return static_cast<double>(params.delta_l) * static_cast<double>(growths);
}

double window_coverage(const ModelParams& params, double m) {
  if (m <= static_cast<double>(params.n)) return 1.0;
  const double exponent = static_cast<double>(params.n) *
                          static_cast<double>(params.scrub_interval);
  return -std::expm1(exponent * std::log1p(-1.0 / m));
}

// log of survival(w) via per-pair retry structure: a pair born at window v
// shares a codeword with probability p_cw and, once colliding, co-draws in
// window u with probability coverage(u)^2.
std::vector<double> oracle_log_survival_sequence(const ModelParams& params,
                                                 std::uint64_t w_max) {
  params.validate();
  if (params.removal_enabled)
    throw std::invalid_argument("oracle: removal-enabled configs are unsupported");

  const double data_bits = static_cast<double>(params.codeword_data_bits);
  const double space = static_cast<double>(params.flip_space_bits);
  const double p_cw = (data_bits - 1.0) / (space - 1.0);

  std::vector<double> pairs_born;
  std::vector<double> no_codraw;  // per birth window: prod over u >= v of (1 - c_u^2)
  std::vector<double> out;
  out.reserve(w_max + 1);

  double prev_pairs = 0.0;
  for (std::uint64_t w = 0; w <= w_max; ++w) {
    const double m = locations_in_window(params, w);
    const double total_pairs = m * (m - 1.0) / 2.0;
    pairs_born.push_back(total_pairs - prev_pairs);
    no_codraw.push_back(1.0);
    prev_pairs = total_pairs;

    const double c = window_coverage(params, m);
    const double keep = 1.0 - c * c;
    double log_survival = 0.0;
    for (std::size_t v = 0; v < no_codraw.size(); ++v) {
      no_codraw[v] *= keep;
      if (pairs_born[v] <= 0.0) continue;
      const double pair_failed = p_cw * (1.0 - no_codraw[v]);
      log_survival += pairs_born[v] * std::log1p(-pair_failed);
    }
    out.push_back(log_survival);
  }
  return out;
}

}  // namespace

double oracle_survival(const ModelParams& params, std::uint64_t window_index) {
  const auto seq = oracle_log_survival_sequence(params, window_index);
  return std::exp(seq[window_index]);
}

double analytic_window_oracle(const ModelParams& params,
                              std::uint64_t window_index) {
  const auto seq = oracle_log_survival_sequence(params, window_index);
  const double log_s = seq[window_index];
  const double log_prev = window_index == 0 ? 0.0 : seq[window_index - 1];
  const double q = -std::expm1(log_s - log_prev);
  return std::clamp(q, 0.0, 1.0);
}

double oracle_mttue_epochs(const ModelParams& params, std::uint64_t max_windows) {
  params.validate();
  if (params.removal_enabled)
    throw std::invalid_argument("oracle: removal-enabled configs are unsupported");

  const double scrub = static_cast<double>(params.scrub_interval);
  double survival_sum = 0.0;
  double prev_log = 0.0;
  double survival = 1.0;
  double last_hazard = 0.0;

  // Incremental version of oracle_log_survival_sequence.
  const double data_bits = static_cast<double>(params.codeword_data_bits);
  const double space = static_cast<double>(params.flip_space_bits);
  const double p_cw = (data_bits - 1.0) / (space - 1.0);
  std::vector<double> pairs_born;
  std::vector<double> no_codraw;
  double prev_pairs = 0.0;

  for (std::uint64_t w = 0; w < max_windows; ++w) {
    const double m = locations_in_window(params, w);
    const double total_pairs = m * (m - 1.0) / 2.0;
    pairs_born.push_back(total_pairs - prev_pairs);
    no_codraw.push_back(1.0);
    prev_pairs = total_pairs;

    const double c = window_coverage(params, m);
    const double keep = 1.0 - c * c;
    double log_survival = 0.0;
    for (std::size_t v = 0; v < no_codraw.size(); ++v) {
      no_codraw[v] *= keep;
      if (pairs_born[v] <= 0.0) continue;
      log_survival += pairs_born[v] * std::log1p(-p_cw * (1.0 - no_codraw[v]));
    }

    survival = std::exp(log_survival);
    last_hazard = -std::expm1(log_survival - prev_log);
    prev_log = log_survival;
    survival_sum += survival;
    if (survival < 1e-9) return scrub * (survival_sum + 0.5);
  }

  // Truncated: extend with the last observed hazard as a geometric tail.
  if (last_hazard > 0.0 && last_hazard < 1.0)
    survival_sum += survival * (1.0 - last_hazard) / last_hazard;
  return scrub * (survival_sum + 0.5);
}

std::vector<SweepRow> sweep(std::span<const SweepConfig> configs,
                            std::uint32_t default_trials,
                            std::uint64_t default_horizon, std::uint64_t seed,
                            std::uint32_t threads) {
  std::vector<SweepRow> rows;
  rows.reserve(configs.size());
  for (const SweepConfig& config : configs) {
    const std::uint32_t trials = config.trials ? config.trials : default_trials;
    const std::uint64_t horizon = config.horizon ? config.horizon : default_horizon;
    const std::uint64_t config_seed = splitmix64(seed) ^ fnv1a64(config.label);

    SweepRow row;
    row.label = config.label;
    const EnsembleResult ensemble =
        run_trials(config.params, trials, horizon, config_seed, threads);
    try {
      row.estimate = estimate_mttue(ensemble.trials, horizon,
                                    config.params.scrub_interval, config.clock);
    } catch (const InsufficientFailuresError&) {
      row.note = "no failures within horizon";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rdt::montecarlo
