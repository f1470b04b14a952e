#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "securakit/markov.hpp"
#include "securakit/rng.hpp"
#include "securakit/securability.hpp"

namespace securakit {

struct MonteCarloConfig {
  std::uint64_t n_trials = 1;
  /// Mission time. Zero is accepted and yields a trivially surviving run.
  double horizon = 0;
  std::uint64_t seed = 0;
  /// Minimum operational fraction of subsystems for threshold criteria.
  double threshold = 1.0;
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  unsigned threads = 1;
  /// Per-trajectory event cap for uncapped-in-time simulations.
  std::uint64_t max_events = 1'000'000'000ULL;

  void validate() const;
};

struct Estimate {
  double value = 0;
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::uint64_t n_effective = 0;
};

struct Event {
  double time;
  Index state;
};

/// CTMC sample path on [0, horizon]; `events` excludes the start state.
struct Trajectory {
  Index start = 0;
  std::vector<Event> events;
  /// Set when an event entered a state with no exits before the horizon.
  std::optional<double> absorbed_at;

  bool survived_horizon() const { return !absorbed_at.has_value(); }
};

/// -ln(u) / rate for u in (0, 1].
double exponential_from_uniform(double rate, double u);
double sample_exponential(double rate, CounterRng& rng);

/// Holding time ~ Exp(exit rate), next state by competing exponentials.
Trajectory simulate_trajectory(const Ctmcd& chain, Index start, double horizon,
                               CounterRng& rng);

/// Fraction of trials that stay in the operational set up to the horizon.
/// Binomial standard error; normal 95% interval clamped to [0, 1].
/// `trial_values`, when given, receives the per-trial indicator.
Estimate estimate_reliability(const Ctmcd& chain, Index start,
                              const MonteCarloConfig& cfg,
                              std::vector<double>* trial_values = nullptr);

/// Reliability estimates at each time of `grid` from one set of trials
/// simulated up to max(grid).
std::vector<Estimate> estimate_reliability_curve(const Ctmcd& chain, Index start,
                                                 const MonteCarloConfig& cfg,
                                                 std::span<const double> grid);

/// Mean time to first entering a non-operational state, simulated without a
/// time cap. Throws RunawayTrialError when a trial exceeds cfg.max_events.
Estimate estimate_mttf(const Ctmcd& chain, Index start, const MonteCarloConfig& cfg,
                       std::vector<double>* trial_values = nullptr);

/// Long-run fraction of time spent in `state`: each trial is observed over
/// [warmup, warmup + horizon]. Standard error across trials.
Estimate estimate_occupancy(const Ctmcd& chain, Index start, Index state,
                            const MonteCarloConfig& cfg, double warmup);

/// Subsystems evolve independently; a trial fails the first time the
/// operational fraction of subsystems drops below cfg.threshold. Every
/// subsystem must be a ChainSubsystem.
Estimate estimate_threshold_reliability(const RoutOfNSystem& system,
                                        const MonteCarloConfig& cfg,
                                        std::vector<double>* trial_values = nullptr);

/// Writes `trial,value` rows.
void write_trials_csv(std::ostream& out, std::span<const double> values);

}  // namespace securakit
