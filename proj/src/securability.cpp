#include "securakit/securability.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace securakit {

namespace {

void require_positive_rate(double value, const char* name) {
  if (!(value > 0) || !std::isfinite(value)) {
    throw DomainError(std::string("msdr: ") + name + " must be positive and finite");
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

void MsDrRates::validate() const {
  require_positive_rate(lambda_ms, "lambda_ms");
  require_positive_rate(lambda_dr, "lambda_dr");
  require_positive_rate(mu_ms, "mu_ms");
  require_positive_rate(mu_dr, "mu_dr");
}

std::string to_string(RepairPolicy policy) {
  switch (policy) {
    case RepairPolicy::concurrent: return "concurrent";
    case RepairPolicy::single_crew: return "single_crew";
  }
  return "unknown";
}

Ctmcd build_msdr(const MsDrRates& rates, RepairPolicy policy) {
  rates.validate();
  using msdr::kBothDown;
  using msdr::kBothUp;
  using msdr::kDrDown;
  using msdr::kMsDown;
  std::vector<Ctmcd::Transition> transitions{
      {kBothUp, kMsDown, rates.lambda_ms},
      {kBothUp, kDrDown, rates.lambda_dr},
      {kMsDown, kBothUp, rates.mu_ms},
      {kMsDown, kBothDown, rates.lambda_dr},
      {kDrDown, kBothUp, rates.mu_dr},
      {kDrDown, kBothDown, rates.lambda_ms},
      {kBothDown, kDrDown, rates.mu_ms},
  };
  if (policy == RepairPolicy::concurrent) {
    transitions.push_back({kBothDown, kMsDown, rates.mu_dr});
  }
  StateSpace space({{"S0", true}, {"S1", true}, {"S2", true}, {"S3", false}});
  return Ctmcd::from_transitions(std::move(space), transitions);
}

double service_availability(const MsDrRates& rates, RepairPolicy policy) {
  const Ctmcd chain = build_msdr(rates, policy);
  return 1.0 - steady_state(chain)[msdr::kBothDown];
}

void ThreatProfile::validate() const {
  if (!(attack_rate >= 0) || !std::isfinite(attack_rate)) {
    throw DomainError("threat: attack_rate must be finite and >= 0");
  }
  if (!(success_probability >= 0 && success_probability <= 1)) {
    throw DomainError("threat: success_probability must lie in [0, 1]");
  }
}

double combine_failure_and_attack(double failure_rate, const ThreatProfile& threat) {
  if (!(failure_rate > 0) || !std::isfinite(failure_rate)) {
    throw DomainError("combine_failure_and_attack: failure rate must be positive");
  }
  threat.validate();
  return failure_rate + threat.effective_rate();
}

double mtta(const ThreatProfile& threat) {
  threat.validate();
  if (!(threat.effective_rate() > 0)) {
    throw DomainError("mtta: undefined for a zero attack rate");
  }
  return 1.0 / threat.effective_rate();
}

MsDrRates apply_threats(MsDrRates rates, std::span<const ThreatProfile> threats) {
  for (const ThreatProfile& threat : threats) {
    const std::string target = lower(threat.applies_to);
    if (target == "ms") {
      rates.lambda_ms = combine_failure_and_attack(rates.lambda_ms, threat);
    } else if (target == "dr") {
      rates.lambda_dr = combine_failure_and_attack(rates.lambda_dr, threat);
    } else {
      throw DomainError("threat: applies_to must be 'ms' or 'dr', got '" +
                        threat.applies_to + "'");
    }
  }
  return rates;
}

const std::string& label_of(const Subsystem& subsystem) {
  return std::visit([](const auto& s) -> const std::string& { return s.label; }, subsystem);
}

RoutOfNSystem::RoutOfNSystem(Index r, std::vector<Subsystem> subsystems)
    : r_(r), subsystems_(std::move(subsystems)) {
  if (subsystems_.empty()) throw DomainError("r-out-of-n: at least one subsystem required");
  if (r_ < 1 || r_ > n()) throw DomainError("r-out-of-n: need 1 <= r <= n");
  for (const Subsystem& s : subsystems_) {
    if (const auto* fixed = std::get_if<FixedSubsystem>(&s)) {
      if (!(fixed->availability >= 0 && fixed->availability <= 1)) {
        throw DomainError("r-out-of-n: availability of '" + fixed->label +
                          "' must lie in [0, 1]");
      }
    } else {
      const auto& chained = std::get<ChainSubsystem>(s);
      if (chained.start < 0 || chained.start >= chained.chain.size()) {
        throw DomainError("r-out-of-n: start state of '" + chained.label + "' out of range");
      }
    }
  }
}

double subsystem_availability(const Subsystem& subsystem) {
  if (const auto* fixed = std::get_if<FixedSubsystem>(&subsystem)) return fixed->availability;
  return availability_steady(std::get<ChainSubsystem>(subsystem).chain);
}

double r_out_of_n_availability(const RoutOfNSystem& system) {
  Eigen::VectorXd p(system.n());
  for (Index i = 0; i < system.n(); ++i) {
    p(i) = subsystem_availability(system.subsystems()[static_cast<std::size_t>(i)]);
  }
  return at_least_r_of_n(p, system.r());
}

AnalysisReport decompose(const RoutOfNSystem& system) {
  AnalysisReport report;
  for (const Subsystem& s : system.subsystems()) {
    const std::string& label = label_of(s);
    report.add(label + ".availability", subsystem_availability(s), Method::analytic);
    if (const auto* chained = std::get_if<ChainSubsystem>(&s)) {
      if (chained->chain.space().has_failure_states()) {
        report.add(label + ".mttf", mttf_absorbing(chained->chain, chained->start),
                   Method::analytic);
        report.add(label + ".mttr", mean_down_time(chained->chain), Method::analytic);
      }
    }
  }
  report.add("system.availability", r_out_of_n_availability(system), Method::analytic);
  report.notes.push_back("subsystems are treated as statistically independent");
  report.notes.push_back("system is good when at least " + std::to_string(system.r()) +
                         " of " + std::to_string(system.n()) + " subsystems are good");
  return report;
}

}  // namespace securakit
