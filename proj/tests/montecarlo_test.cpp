#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "securakit/montecarlo.hpp"

using namespace securakit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Ctmcd series_chain(double la, double lb) {
  StateSpace space({{"s0", true}, {"s1", true}, {"fail", false}});
  return Ctmcd::from_transitions(space, {{0, 1, la}, {1, 2, lb}});
}

Ctmcd non_repairable(double lambda) {
  StateSpace space({{"up", true}, {"down", false}});
  return Ctmcd::from_transitions(space, {{0, 1, lambda}});
}

MonteCarloConfig config(std::uint64_t n, double horizon, std::uint64_t seed) {
  MonteCarloConfig cfg;
  cfg.n_trials = n;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

bool within_3se(const Estimate& e, double truth) {
  return std::abs(e.value - truth) <= 3 * e.std_error;
}

}  // namespace

TEST_CASE("config invariants", "[mc]") {
  MonteCarloConfig cfg;
  cfg.n_trials = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = config(10, -1, 0);
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = config(10, 1, 0);
  cfg.threshold = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.threshold = 1.2;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("counter rng streams are addressable", "[mc][rng]") {
  CounterRng a(5, 17), b(5, 17), c(5, 18), d(6, 17);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CounterRng e(1, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = e.uniform_open_closed();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("exponential sampling", "[mc]") {
  CHECK(exponential_from_uniform(3.0, 1.0) == 0.0);
  CHECK_THROWS_AS(exponential_from_uniform(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(exponential_from_uniform(-1.0, 0.5), DomainError);

  CounterRng rng(2024, 0);
  const int n = 1'000'000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_exponential(0.5, rng);
  CHECK_THAT(sum / n, WithinAbs(2.0, 3 * (2.0 / 1000)));

  CounterRng rng2(2025, 0);
  int above = 0;
  for (int i = 0; i < n; ++i) above += sample_exponential(1.0, rng2) > 1.0;
  const double p = std::exp(-1.0), se = std::sqrt(p * (1 - p) / n);
  CHECK_THAT(static_cast<double>(above) / n, WithinAbs(p, 3 * se));
}

TEST_CASE("trajectories", "[mc]") {
  SECTION("first event time is exponential") {
    const Ctmcd c = build_two_state(0.01, 0.1);
    const int n = 100000;
    int quiet = 0;
    for (int k = 0; k < n; ++k) {
      CounterRng rng(9, static_cast<std::uint64_t>(k));
      quiet += simulate_trajectory(c, 0, 10.0, rng).events.empty();
    }
    const double p = std::exp(-0.1), se = std::sqrt(p * (1 - p) / n);
    CHECK_THAT(static_cast<double>(quiet) / n, WithinAbs(p, 3 * se));
  }
  SECTION("no exits anywhere") {
    StateSpace s({{"a", true}, {"b", false}});
    const Ctmcd frozen(s, Ctmcd::Matrix::Zero(2, 2));
    CounterRng rng(1, 1);
    const Trajectory t = simulate_trajectory(frozen, 0, 100.0, rng);
    CHECK(t.events.empty());
    CHECK(t.survived_horizon());
  }
  SECTION("competing risks proportions") {
    StateSpace s({{"src", true}, {"a", false}, {"b", false}});
    const double la = 0.3, lb = 0.7;
    const Ctmcd c = Ctmcd::from_transitions(s, {{0, 1, la}, {0, 2, lb}});
    const int n = 100000;
    int to_a = 0;
    for (int k = 0; k < n; ++k) {
      CounterRng rng(3, static_cast<std::uint64_t>(k));
      const Trajectory t = simulate_trajectory(c, 0, 1e9, rng);
      REQUIRE(t.events.size() == 1);
      REQUIRE(t.absorbed_at.has_value());
      to_a += t.events[0].state == 1;
    }
    const double p = la / (la + lb), se = std::sqrt(p * (1 - p) / n);
    CHECK_THAT(static_cast<double>(to_a) / n, WithinAbs(p, 3 * se));
  }
  SECTION("legality") {
    const Ctmcd c = build_msdr({0.05, 0.02, 0.1, 0.3});
    for (std::uint64_t k = 0; k < 200; ++k) {
      CounterRng rng(4, k);
      const Trajectory t = simulate_trajectory(c, 0, 500.0, rng);
      Index prev = t.start;
      double prev_time = 0;
      for (const Event& e : t.events) {
        REQUIRE(c.rate(prev, e.state) > 0);
        REQUIRE(e.time > prev_time);
        REQUIRE(e.time <= 500.0);
        prev = e.state;
        prev_time = e.time;
      }
    }
  }
}

TEST_CASE("reliability estimate", "[mc]") {
  const Ctmcd c = build_two_state(0.01, 0.1);
  const Estimate e = estimate_reliability(c, 0, config(100000, 10, 42));
  CHECK(within_3se(e, std::exp(-0.1)));
  CHECK(e.ci_low <= e.value);
  CHECK(e.value <= e.ci_high);
  CHECK(e.n_effective == 100000);

  const Estimate zero = estimate_reliability(c, 0, config(1000, 0, 42));
  CHECK(zero.value == 1.0);
  CHECK(zero.std_error == 0.0);
  CHECK(zero.ci_high <= 1.0);

  CHECK_THROWS_AS(estimate_reliability(c, 1, config(10, 1, 1)), DomainError);
}

TEST_CASE("reliability estimate agrees with the absorbing transient", "[mc]") {
  const Ctmcd c = build_msdr({0.01, 0.01, 0.1, 0.1});
  const double h = 300;
  const Estimate e = estimate_reliability(c, 0, config(100000, h, 8));
  const double exact = reliability_at(c, ProbabilityVector<double>::point_mass(4, 0), h);
  CHECK(within_3se(e, exact));
}

TEST_CASE("reliability curve", "[mc]") {
  const Ctmcd c = build_two_state(0.02, 0.1);
  const std::vector<double> grid{0, 5, 10, 20, 40};
  const auto curve = estimate_reliability_curve(c, 0, config(50000, 40, 5), grid);
  REQUIRE(curve.size() == grid.size());
  CHECK(curve[0].value == 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(within_3se(curve[i], std::exp(-0.02 * grid[i])));
    if (i) CHECK(curve[i].value <= curve[i - 1].value);
  }
  // The last point is the plain estimate with the same seed.
  CHECK(curve.back().value == estimate_reliability(c, 0, config(50000, 40, 5)).value);
}

TEST_CASE("mttf estimate", "[mc]") {
  CHECK(within_3se(estimate_mttf(build_two_state(0.01, 0.1), 0, config(100000, 0, 1)), 100.0));
  CHECK(within_3se(estimate_mttf(series_chain(0.5, 0.25), 0, config(100000, 0, 2)), 6.0));
  const Ctmcd msdr = build_msdr({0.01, 0.01, 0.1, 0.1});
  const Estimate e = estimate_mttf(msdr, 0, config(100000, 0, 3));
  CHECK(within_3se(e, mttf_absorbing(msdr, 0)));
  CHECK(e.value > 0);
}

TEST_CASE("mttf with an unreachable or runaway failure set", "[mc]") {
  StateSpace s({{"a", true}, {"b", true}, {"f", false}});
  const Ctmcd never = Ctmcd::from_transitions(s, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}});
  CHECK_THROWS_AS(estimate_mttf(never, 0, config(10, 0, 1)), UnreachableError);

  const Ctmcd slow = Ctmcd::from_transitions(s, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1e-9}});
  MonteCarloConfig cfg = config(4, 0, 1);
  cfg.max_events = 1000;
  CHECK_THROWS_AS(estimate_mttf(slow, 0, cfg), RunawayTrialError);
}

TEST_CASE("long-run occupancy of the both-down state", "[mc]") {
  const Ctmcd c = build_msdr({0.01, 0.01, 0.1, 0.1});
  const Estimate e = estimate_occupancy(c, 0, msdr::kBothDown, config(20000, 2000, 6), 200);
  CHECK(within_3se(e, std::pow(1.0 / 11, 2)));
}

TEST_CASE("threshold reliability", "[mc]") {
  const double lambda = 0.02, h = 10;
  SECTION("one subsystem reduces to plain reliability") {
    const Ctmcd c = build_two_state(lambda, 0.1);
    const RoutOfNSystem sys(1, {ChainSubsystem{"a", c, 0}});
    const Estimate e = estimate_threshold_reliability(sys, config(100000, h, 11));
    CHECK(within_3se(e, std::exp(-lambda * h)));
  }
  SECTION("three non-repairable, first failure is fatal") {
    const Ctmcd c = non_repairable(lambda);
    const RoutOfNSystem sys(3, {ChainSubsystem{"a", c, 0}, ChainSubsystem{"b", c, 0},
                                ChainSubsystem{"c", c, 0}});
    MonteCarloConfig cfg = config(100000, h, 12);
    cfg.threshold = 0.7;
    CHECK(within_3se(estimate_threshold_reliability(sys, cfg), std::exp(-3 * lambda * h)));
  }
  SECTION("two non-repairable in parallel") {
    const Ctmcd c = non_repairable(lambda);
    const RoutOfNSystem sys(1, {ChainSubsystem{"a", c, 0}, ChainSubsystem{"b", c, 0}});
    MonteCarloConfig cfg = config(100000, h, 13);
    cfg.threshold = 0.5;
    const double q = 1 - std::exp(-lambda * h);
    CHECK(within_3se(estimate_threshold_reliability(sys, cfg), 1 - q * q));
  }
  SECTION("fixed subsystems are rejected") {
    const RoutOfNSystem sys(1, {FixedSubsystem{"a", 0.9}});
    CHECK_THROWS_AS(estimate_threshold_reliability(sys, config(10, 1, 1)), DomainError);
  }
}

TEST_CASE("results do not depend on the worker count", "[mc][determinism]") {
  const Ctmcd c = build_msdr({0.01, 0.02, 0.1, 0.05});
  std::vector<double> base_trials;
  MonteCarloConfig cfg = config(20001, 150, 77);
  cfg.threads = 1;
  const Estimate r1 = estimate_reliability(c, 0, cfg, &base_trials);
  const Estimate m1 = estimate_mttf(c, 0, cfg);
  for (unsigned threads : {2u, 3u, 8u, 0u}) {
    cfg.threads = threads;
    std::vector<double> trials;
    const Estimate r = estimate_reliability(c, 0, cfg, &trials);
    const Estimate m = estimate_mttf(c, 0, cfg);
    CHECK(r.value == r1.value);
    CHECK(r.std_error == r1.std_error);
    CHECK(m.value == m1.value);
    CHECK(m.std_error == m1.std_error);
    CHECK(trials == base_trials);
  }
}

TEST_CASE("coverage over seeds", "[mc][statistics]") {
  const Ctmcd c = build_two_state(0.01, 0.1);
  int hits_r = 0, hits_m = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    hits_r += within_3se(estimate_reliability(c, 0, config(20000, 10, seed)), std::exp(-0.1));
    hits_m += within_3se(estimate_mttf(c, 0, config(20000, 0, seed)), 100.0);
  }
  CHECK(hits_r >= 19);
  CHECK(hits_m >= 19);
}

TEST_CASE("interval width scales with the square root of N", "[mc][statistics]") {
  const Ctmcd c = build_two_state(0.01, 0.1);
  const Estimate small = estimate_reliability(c, 0, config(1000, 10, 31));
  const Estimate large = estimate_reliability(c, 0, config(10000, 10, 31));
  const double ratio = (small.ci_high - small.ci_low) / (large.ci_high - large.ci_low);
  CHECK_THAT(ratio, WithinRel(std::sqrt(10.0), 0.25));
}

TEST_CASE("estimates stay in range", "[mc]") {
  const Ctmcd c = build_two_state(5.0, 0.1);
  const Estimate e = estimate_reliability(c, 0, config(500, 10, 1));
  CHECK(e.value >= 0.0);
  CHECK(e.ci_low >= 0.0);
  CHECK(e.ci_high <= 1.0);
}

TEST_CASE("per-trial csv", "[mc]") {
  std::ostringstream out;
  const std::vector<double> v{1, 0, 1};
  write_trials_csv(out, v);
  CHECK(out.str() == "trial,value\n0,1\n1,0\n2,1\n");
}
