#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "securakit/markov.hpp"
#include "securakit/report.hpp"

namespace securakit {

/// Failure and repair rates of a main system (MS) backed by a disaster
/// recovery site (DR). All rates per unit time.
struct MsDrRates {
  double lambda_ms = 0;
  double lambda_dr = 0;
  double mu_ms = 0;
  double mu_dr = 0;

  void validate() const;
};

/// What happens when both MS and DR are down.
enum class RepairPolicy {
  concurrent,   // both repaired in parallel
  single_crew,  // one repair at a time, MS first
};

std::string to_string(RepairPolicy policy);

/// State ids of the chain returned by build_msdr.
namespace msdr {
inline constexpr Index kBothUp = 0;
inline constexpr Index kMsDown = 1;
inline constexpr Index kDrDown = 2;
inline constexpr Index kBothDown = 3;
}  // namespace msdr

/**
 * Four-state MS/DR chain. MS and DR fail and repair independently:
 *
 *   S0 -> S1 lambda_ms   S0 -> S2 lambda_dr
 *   S1 -> S0 mu_ms       S1 -> S3 lambda_dr
 *   S2 -> S0 mu_dr       S2 -> S3 lambda_ms
 *   S3 -> S1 mu_dr       S3 -> S2 mu_ms
 *
 * Only S3 (both down) is non-operational. With RepairPolicy::single_crew the
 * S3 -> S1 transition is dropped so MS is always repaired first.
 */
Ctmcd build_msdr(const MsDrRates& rates,
                 RepairPolicy policy = RepairPolicy::concurrent);

/// Long-run probability that at least one of MS and DR is up: 1 - pi(S3).
double service_availability(const MsDrRates& rates,
                            RepairPolicy policy = RepairPolicy::concurrent);

/// Successful attacks arriving as a Poisson process.
struct ThreatProfile {
  double attack_rate = 0;
  std::string applies_to;
  /// Probability that an attack succeeds; scales the arrival rate.
  double success_probability = 1.0;

  void validate() const;
  double effective_rate() const { return attack_rate * success_probability; }
};

/// Superposition of independent failure and attack processes.
double combine_failure_and_attack(double failure_rate, const ThreatProfile& threat);

/// Mean time to attack, 1 / effective attack rate.
double mtta(const ThreatProfile& threat);

/// Adds each threat to the failure rate of the component it names ("ms" or
/// "dr", case-insensitive).
MsDrRates apply_threats(MsDrRates rates, std::span<const ThreatProfile> threats);

// ---------------------------------------------------------------------------
// r-out-of-n:G composition

struct ChainSubsystem {
  std::string label;
  Ctmcd chain;
  Index start = 0;
};

struct FixedSubsystem {
  std::string label;
  double availability = 0;
};

using Subsystem = std::variant<ChainSubsystem, FixedSubsystem>;

const std::string& label_of(const Subsystem& subsystem);

/// Good when at least r of its n independent subsystems are good.
class RoutOfNSystem {
 public:
  RoutOfNSystem(Index r, std::vector<Subsystem> subsystems);

  Index r() const { return r_; }
  Index n() const { return static_cast<Index>(subsystems_.size()); }
  const std::vector<Subsystem>& subsystems() const { return subsystems_; }

 private:
  Index r_;
  std::vector<Subsystem> subsystems_;
};

/**
 * P(at least r of n independent events occur) for success probabilities p,
 * by the Poisson-binomial recursion over (component, number up). O(n^2).
 */
template <typename Derived>
typename Derived::Scalar at_least_r_of_n(const Eigen::MatrixBase<Derived>& p, Index r) {
  using Scalar = typename Derived::Scalar;
  const Index n = p.size();
  if (n < 1 || r < 1 || r > n) throw DomainError("r-out-of-n: need 1 <= r <= n");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> count = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n + 1);
  count(0) = 1;
  for (Index i = 0; i < n; ++i) {
    const Scalar pi = p(i);
    if (!(pi >= 0 && pi <= 1)) throw DomainError("r-out-of-n: probabilities must lie in [0, 1]");
    for (Index k = i + 1; k >= 1; --k) count(k) = count(k) * (1 - pi) + count(k - 1) * pi;
    count(0) *= (1 - pi);
  }
  return count.tail(n - r + 1).sum();
}

/// Steady availability of one subsystem (the given value for fixed ones).
double subsystem_availability(const Subsystem& subsystem);

double r_out_of_n_availability(const RoutOfNSystem& system);

/// Per-subsystem metrics followed by the composed system availability.
AnalysisReport decompose(const RoutOfNSystem& system);

}  // namespace securakit
