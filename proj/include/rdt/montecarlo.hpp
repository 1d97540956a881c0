#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdt/errmodel.hpp"

namespace rdt::montecarlo {

using errmodel::ModelParams;
using errmodel::UncorrectableEvent;

struct TrialResult {
  std::optional<std::uint64_t> first_failure_epoch;  // nullopt = censored at horizon
};

// P(uncorrectable by epoch e), sampled at scrub boundaries plus a log-spaced
// grid; failures only materialize inside windows.
struct FailureCurve {
  std::vector<std::uint64_t> epochs;
  std::vector<double> p_fail_by;
};

// Epoch wall-clock model: one epoch hammers every row once at the configured
// hammer count, 90 ns per activation.
struct EpochClock {
  std::uint64_t rows_hammered_per_epoch = 262144;
  std::uint64_t hammer_count = 10000;
  double seconds_per_hammer = 90e-9;
};

double epoch_hours(const EpochClock& clock);

enum class MttueMethod { empirical_mean, hazard_extrapolated };

struct MttueEstimate {
  double mttue_epochs = 0.0;
  double mttue_hours = 0.0;
  double censored_fraction = 0.0;
  MttueMethod method = MttueMethod::empirical_mean;
  std::uint64_t failures = 0;
  std::uint64_t trials = 0;
};

struct TrialEvent {
  std::uint32_t trial = 0;
  UncorrectableEvent event;
};

struct EnsembleResult {
  std::vector<TrialResult> trials;
  std::vector<TrialEvent> events;  // ordered by trial id
  FailureCurve curve;
  std::uint64_t horizon = 0;
};

// Trial t runs on an RNG stream derived from (seed, t), so results are
// independent of execution order and thread count.
EnsembleResult run_trials(const ModelParams& params, std::uint32_t trials,
                          std::uint64_t horizon, std::uint64_t seed,
                          std::uint32_t threads = 1);

// Empirical mean when nothing is censored; otherwise a constant per-window
// hazard is fitted to the observed failures and censored trials carry the
// geometric tail mass. Throws InsufficientFailuresError when no trial failed.
MttueEstimate estimate_mttue(std::span<const TrialResult> results,
                             std::uint64_t horizon, std::uint64_t scrub_interval,
                             const EpochClock& clock = {});

// Closed-form approximation of the failure probability of scrub window w
// (0-based) for the removal-disabled process, conditioned on survival so
// far. Pairs of locations collide in a codeword with the exact
// without-replacement probability; a colliding pair fails a window with
// probability coverage^2 where coverage = 1 - (1 - 1/|L|)^(n * scrub).
// Growth boundaries are assumed aligned with window starts. Documented
// relative error <= 10% for |L|^2 << codewords.
double analytic_window_oracle(const ModelParams& params, std::uint64_t window_index);

// Survival probability through window w under the same approximation.
double oracle_survival(const ModelParams& params, std::uint64_t window_index);

// Integrates the oracle's survival curve into an MTTUE (epochs).
double oracle_mttue_epochs(const ModelParams& params,
                           std::uint64_t max_windows = 1u << 20);

struct SweepConfig {
  std::string label;
  ModelParams params;
  EpochClock clock;
  std::uint32_t trials = 0;      // 0 = inherit the sweep-level default
  std::uint64_t horizon = 0;     // 0 = inherit
};

struct SweepRow {
  std::string label;
  std::optional<MttueEstimate> estimate;  // empty when no trial failed
  std::string note;
};

// One ensemble per config; the per-config seed is derived from (seed, label)
// so adding or reordering entries does not perturb results.
std::vector<SweepRow> sweep(std::span<const SweepConfig> configs,
                            std::uint32_t default_trials,
                            std::uint64_t default_horizon, std::uint64_t seed,
                            std::uint32_t threads = 1);

}  // namespace rdt::montecarlo
