#include "securakit/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>

namespace securakit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZ95 = 1.959963984540054;

/// Embedded jump chain: exit rate and cumulative rates of positive-rate
/// targets for every state.
class JumpTable {
 public:
  explicit JumpTable(const Ctmcd& chain) {
    const Index n = chain.size();
    exit_.resize(static_cast<std::size_t>(n));
    targets_.resize(static_cast<std::size_t>(n));
    cumulative_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      double acc = 0;
      for (Index j = 0; j < n; ++j) {
        if (j == i || !(chain.rate(i, j) > 0)) continue;
        acc += chain.rate(i, j);
        targets_[u].push_back(j);
        cumulative_[u].push_back(acc);
      }
      exit_[u] = acc;
    }
  }

  /// Advances (state, time) by one jump; false if the state has no exits.
  bool step(Index& state, double& time, CounterRng& rng) const {
    const auto u = static_cast<std::size_t>(state);
    const double exit = exit_[u];
    if (!(exit > 0)) return false;
    time += exponential_from_uniform(exit, rng.uniform_open_closed());
    const double x = rng.uniform_open_closed() * exit;
    const auto& cum = cumulative_[u];
    auto it = std::lower_bound(cum.begin(), cum.end(), x);
    if (it == cum.end()) --it;
    state = targets_[u][static_cast<std::size_t>(it - cum.begin())];
    return true;
  }

 private:
  std::vector<double> exit_;
  std::vector<std::vector<Index>> targets_;
  std::vector<std::vector<double>> cumulative_;
};

unsigned resolve_threads(unsigned requested) {
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

/// Runs fn(trial) for every trial index in contiguous blocks per worker. If
/// trials throw, the exception of the lowest failing trial is rethrown, as
/// a serial run would.
template <typename Fn>
void for_each_trial(std::uint64_t n_trials, unsigned threads, Fn&& fn) {
  const std::uint64_t workers =
      std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(n_trials, 1));
  if (workers <= 1) {
    for (std::uint64_t k = 0; k < n_trials; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t block = (n_trials + workers - 1) / workers;
  for (std::uint64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::uint64_t begin = w * block;
      const std::uint64_t end = std::min(n_trials, begin + block);
      try {
        for (std::uint64_t k = begin; k < end; ++k) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Estimate binomial_estimate(std::uint64_t successes, std::uint64_t n) {
  Estimate e;
  e.n_effective = n;
  e.value = static_cast<double>(successes) / static_cast<double>(n);
  e.std_error = std::sqrt(e.value * (1 - e.value) / static_cast<double>(n));
  e.ci_low = std::clamp(e.value - kZ95 * e.std_error, 0.0, 1.0);
  e.ci_high = std::clamp(e.value + kZ95 * e.std_error, 0.0, 1.0);
  return e;
}

// Trial-ordered summation keeps the result independent of thread count.
Estimate mean_estimate(const std::vector<double>& samples, double lower, double upper) {
  const auto n = static_cast<double>(samples.size());
  double sum = 0;
  for (double x : samples) sum += x;
  const double mean = sum / n;
  double ss = 0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  Estimate e;
  e.n_effective = samples.size();
  e.value = mean;
  e.std_error = samples.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  e.ci_low = std::clamp(mean - kZ95 * e.std_error, lower, upper);
  e.ci_high = std::clamp(mean + kZ95 * e.std_error, lower, upper);
  return e;
}

void require_operational_start(const Ctmcd& chain, Index start, const char* fn) {
  if (start < 0 || start >= chain.size()) {
    throw DomainError(std::string(fn) + ": start state out of range");
  }
  if (!chain.space().operational(start)) {
    throw DomainError(std::string(fn) + ": start state must be operational");
  }
}

/// Time of first entry into a non-operational state, or +inf if none
/// happens before `time_cap`.
double first_failure_time(const JumpTable& table, const StateSpace& space, Index start,
                          double time_cap, std::uint64_t max_events, CounterRng& rng) {
  Index state = start;
  double time = 0;
  for (std::uint64_t events = 0;; ++events) {
    if (events >= max_events) {
      throw RunawayTrialError("monte carlo: trajectory exceeded " +
                              std::to_string(max_events) + " events without failing");
    }
    if (!table.step(state, time, rng)) {
      if (time_cap == kInf) {
        throw RunawayTrialError("monte carlo: trajectory absorbed in operational state '" +
                                space[state].label + "'");
      }
      return kInf;
    }
    if (time > time_cap) return kInf;
    if (!space.operational(state)) return time;
  }
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (n_trials < 1) throw DomainError("monte carlo: n_trials must be >= 1");
  if (!(horizon >= 0) || !std::isfinite(horizon)) {
    throw DomainError("monte carlo: horizon must be finite and >= 0");
  }
  if (!(threshold > 0 && threshold <= 1)) {
    throw DomainError("monte carlo: threshold must lie in (0, 1]");
  }
  if (max_events < 1) throw DomainError("monte carlo: max_events must be >= 1");
}

double exponential_from_uniform(double rate, double u) {
  if (!(rate > 0) || !std::isfinite(rate)) {
    throw DomainError("exponential sampling: rate must be positive");
  }
  return -std::log(u) / rate;
}

double sample_exponential(double rate, CounterRng& rng) {
  return exponential_from_uniform(rate, rng.uniform_open_closed());
}

Trajectory simulate_trajectory(const Ctmcd& chain, Index start, double horizon,
                               CounterRng& rng) {
  if (start < 0 || start >= chain.size()) {
    throw DomainError("simulate_trajectory: start state out of range");
  }
  if (!(horizon >= 0)) throw DomainError("simulate_trajectory: horizon must be >= 0");
  const JumpTable table(chain);
  Trajectory path;
  path.start = start;
  Index state = start;
  double time = 0;
  while (table.step(state, time, rng)) {
    if (time > horizon) break;
    path.events.push_back({time, state});
    if (!(chain.exit_rate(state) > 0)) {
      path.absorbed_at = time;
      break;
    }
  }
  return path;
}

Estimate estimate_reliability(const Ctmcd& chain, Index start, const MonteCarloConfig& cfg,
                              std::vector<double>* trial_values) {
  cfg.validate();
  require_operational_start(chain, start, "estimate_reliability");
  const JumpTable table(chain);
  std::vector<unsigned char> survived(cfg.n_trials);
  for_each_trial(cfg.n_trials, cfg.threads, [&](std::uint64_t k) {
    CounterRng rng(cfg.seed, k);
    survived[k] = first_failure_time(table, chain.space(), start, cfg.horizon,
                                     cfg.max_events, rng) > cfg.horizon;
  });
  std::uint64_t successes = 0;
  for (unsigned char s : survived) successes += s;
  if (trial_values) trial_values->assign(survived.begin(), survived.end());
  return binomial_estimate(successes, cfg.n_trials);
}

std::vector<Estimate> estimate_reliability_curve(const Ctmcd& chain, Index start,
                                                 const MonteCarloConfig& cfg,
                                                 std::span<const double> grid) {
  cfg.validate();
  require_operational_start(chain, start, "estimate_reliability_curve");
  if (grid.empty()) return {};
  for (double t : grid) {
    if (!(t >= 0) || !std::isfinite(t)) throw DomainError("reliability curve: bad grid time");
  }
  const double cap = *std::max_element(grid.begin(), grid.end());
  const JumpTable table(chain);
  std::vector<double> ttf(cfg.n_trials);
  for_each_trial(cfg.n_trials, cfg.threads, [&](std::uint64_t k) {
    CounterRng rng(cfg.seed, k);
    ttf[k] = first_failure_time(table, chain.space(), start, cap, cfg.max_events, rng);
  });
  std::vector<Estimate> curve;
  curve.reserve(grid.size());
  for (double t : grid) {
    const auto alive = static_cast<std::uint64_t>(
        std::count_if(ttf.begin(), ttf.end(), [t](double x) { return x > t; }));
    curve.push_back(binomial_estimate(alive, cfg.n_trials));
  }
  return curve;
}

Estimate estimate_mttf(const Ctmcd& chain, Index start, const MonteCarloConfig& cfg,
                       std::vector<double>* trial_values) {
  cfg.validate();
  require_operational_start(chain, start, "estimate_mttf");
  std::vector<bool> operational = chain.space().operational_mask();
  std::vector<Index> failed;
  for (Index i = 0; i < chain.size(); ++i) {
    if (!operational[static_cast<std::size_t>(i)]) failed.push_back(i);
  }
  const std::vector<bool> seen = reachable(chain, {start}, &operational);
  if (std::none_of(failed.begin(), failed.end(),
                   [&](Index j) { return seen[static_cast<std::size_t>(j)]; })) {
    throw UnreachableError("estimate_mttf: no non-operational state reachable from start");
  }
  const JumpTable table(chain);
  std::vector<double> ttf(cfg.n_trials);
  for_each_trial(cfg.n_trials, cfg.threads, [&](std::uint64_t k) {
    CounterRng rng(cfg.seed, k);
    ttf[k] = first_failure_time(table, chain.space(), start, kInf, cfg.max_events, rng);
  });
  if (trial_values) *trial_values = ttf;
  return mean_estimate(ttf, 0.0, kInf);
}

Estimate estimate_occupancy(const Ctmcd& chain, Index start, Index state,
                            const MonteCarloConfig& cfg, double warmup) {
  cfg.validate();
  if (!(cfg.horizon > 0)) throw DomainError("estimate_occupancy: horizon must be positive");
  if (!(warmup >= 0) || !std::isfinite(warmup)) {
    throw DomainError("estimate_occupancy: warmup must be finite and >= 0");
  }
  if (start < 0 || start >= chain.size() || state < 0 || state >= chain.size()) {
    throw DomainError("estimate_occupancy: state out of range");
  }
  const JumpTable table(chain);
  const double end = warmup + cfg.horizon;
  std::vector<double> fraction(cfg.n_trials);
  for_each_trial(cfg.n_trials, cfg.threads, [&](std::uint64_t k) {
    CounterRng rng(cfg.seed, k);
    Index current = start;
    double time = 0;
    double occupied = 0;
    std::uint64_t events = 0;
    while (time < end) {
      Index next = current;
      double next_time = time;
      if (!table.step(next, next_time, rng)) next_time = kInf;
      if (current == state) {
        const double lo = std::max(time, warmup);
        const double hi = std::min(next_time, end);
        if (hi > lo) occupied += hi - lo;
      }
      current = next;
      time = next_time;
      if (++events > cfg.max_events) {
        throw RunawayTrialError("estimate_occupancy: event cap exceeded");
      }
    }
    fraction[k] = occupied / cfg.horizon;
  });
  return mean_estimate(fraction, 0.0, 1.0);
}

Estimate estimate_threshold_reliability(const RoutOfNSystem& system,
                                        const MonteCarloConfig& cfg,
                                        std::vector<double>* trial_values) {
  cfg.validate();
  std::vector<const ChainSubsystem*> parts;
  std::vector<JumpTable> tables;
  for (const Subsystem& s : system.subsystems()) {
    const auto* chained = std::get_if<ChainSubsystem>(&s);
    if (!chained) {
      throw DomainError("threshold reliability: subsystem '" + label_of(s) +
                        "' has no dynamics (fixed availability)");
    }
    parts.push_back(chained);
    tables.emplace_back(chained->chain);
  }
  const auto n = static_cast<double>(parts.size());
  const auto below = [&](std::size_t up) { return static_cast<double>(up) / n < cfg.threshold; };

  std::vector<unsigned char> survived(cfg.n_trials);
  for_each_trial(cfg.n_trials, cfg.threads, [&](std::uint64_t k) {
    CounterRng rng(cfg.seed, k);
    struct Change {
      double time;
      std::size_t part;
      bool operational;
    };
    std::vector<Change> changes;
    std::size_t up_count = 0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const StateSpace& space = parts[j]->chain.space();
      Index state = parts[j]->start;
      double time = 0;
      bool status = space.operational(state);
      up_count += status;
      std::uint64_t events = 0;
      while (tables[j].step(state, time, rng) && time <= cfg.horizon) {
        if (++events > cfg.max_events) {
          throw RunawayTrialError("threshold reliability: event cap exceeded");
        }
        if (space.operational(state) != status) {
          status = !status;
          changes.push_back({time, j, status});
        }
      }
    }
    std::stable_sort(changes.begin(), changes.end(),
                     [](const Change& a, const Change& b) { return a.time < b.time; });
    bool ok = !below(up_count);
    for (const Change& c : changes) {
      if (!ok) break;
      up_count = c.operational ? up_count + 1 : up_count - 1;
      ok = !below(up_count);
    }
    survived[k] = ok;
  });
  std::uint64_t successes = 0;
  for (unsigned char s : survived) successes += s;
  if (trial_values) trial_values->assign(survived.begin(), survived.end());
  return binomial_estimate(successes, cfg.n_trials);
}

void write_trials_csv(std::ostream& out, std::span<const double> values) {
  out << "trial,value\n";
  char buf[64];
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, values[k]);
    out << buf;
  }
}

}  // namespace securakit
