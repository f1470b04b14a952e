#include "securakit/markov.hpp"

#include <unordered_set>

namespace securakit {

StateSpace::StateSpace(std::vector<State> states) : states_(std::move(states)) {
  if (states_.empty()) throw DomainError("state space: at least one state required");
  std::unordered_set<std::string> labels;
  bool any_operational = false;
  for (const State& s : states_) {
    if (s.label.empty()) throw DomainError("state space: state labels must be nonempty");
    if (!labels.insert(s.label).second) {
      throw DomainError("state space: duplicate state label '" + s.label + "'");
    }
    any_operational = any_operational || s.operational;
  }
  if (!any_operational) {
    throw DomainError("state space: at least one operational state required");
  }
}

std::optional<Index> StateSpace::find(const std::string& label) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].label == label) return static_cast<Index>(i);
  }
  return std::nullopt;
}

bool StateSpace::has_failure_states() const {
  return std::any_of(states_.begin(), states_.end(),
                     [](const State& s) { return !s.operational; });
}

std::vector<bool> StateSpace::operational_mask() const {
  std::vector<bool> mask;
  mask.reserve(states_.size());
  for (const State& s : states_) mask.push_back(s.operational);
  return mask;
}

}  // namespace securakit
