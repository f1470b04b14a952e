#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "securakit/errors.hpp"
#include "securakit/method.hpp"

namespace securakit {

using Index = Eigen::Index;

struct State {
  std::string label;
  bool operational = true;
};

/// Ordered, labelled state space. Ids are the positions 0..n-1.
class StateSpace {
 public:
  explicit StateSpace(std::vector<State> states);

  Index size() const { return static_cast<Index>(states_.size()); }
  const State& operator[](Index id) const { return states_.at(static_cast<std::size_t>(id)); }
  const std::vector<State>& states() const { return states_; }

  std::optional<Index> find(const std::string& label) const;
  bool operational(Index id) const { return (*this)[id].operational; }
  bool has_failure_states() const;
  std::vector<bool> operational_mask() const;

 private:
  std::vector<State> states_;
};

/**
 * Continuous-time Markov chain held as its generator Q. Off-diagonal entries
 * are transition rates; each diagonal entry is minus the sum of the
 * off-diagonals in its row, so rows sum to zero.
 */
template <typename Scalar>
class Ctmc {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Transition {
    Index from;
    Index to;
    Scalar rate;
  };

  /// `rates` holds the off-diagonal transition rates; its diagonal is ignored.
  Ctmc(StateSpace space, const Matrix& rates)
      : space_(std::move(space)), generator_(rates) {
    const Index n = space_.size();
    if (generator_.rows() != n || generator_.cols() != n) {
      throw DomainError("ctmc: rate matrix must be " + std::to_string(n) + "x" +
                        std::to_string(n));
    }
    for (Index i = 0; i < n; ++i) {
      Scalar exit = 0;
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const Scalar r = generator_(i, j);
        if (!(r >= 0) || !std::isfinite(r)) {
          throw DomainError("ctmc: rate " + space_[i].label + " -> " +
                            space_[j].label + " must be finite and >= 0");
        }
        exit += r;
      }
      generator_(i, i) = -exit;
    }
  }

  /// Parallel transitions between the same pair of states accumulate.
  static Ctmc from_transitions(StateSpace space,
                               const std::vector<Transition>& transitions) {
    const Index n = space.size();
    Matrix rates = Matrix::Zero(n, n);
    for (const auto& tr : transitions) {
      if (tr.from < 0 || tr.from >= n || tr.to < 0 || tr.to >= n) {
        throw DomainError("ctmc: transition endpoint out of range");
      }
      if (tr.from == tr.to) throw DomainError("ctmc: self-transitions are not allowed");
      if (!(tr.rate >= 0) || !std::isfinite(tr.rate)) {
        throw DomainError("ctmc: transition rates must be finite and >= 0");
      }
      rates(tr.from, tr.to) += tr.rate;
    }
    return Ctmc(std::move(space), rates);
  }

  const StateSpace& space() const { return space_; }
  const Matrix& generator() const { return generator_; }
  Index size() const { return space_.size(); }
  Scalar rate(Index from, Index to) const { return generator_(from, to); }
  Scalar exit_rate(Index i) const { return -generator_(i, i); }
  Scalar max_exit_rate() const { return (-generator_.diagonal()).maxCoeff(); }

 private:
  StateSpace space_;
  Matrix generator_;
};

using Ctmcd = Ctmc<double>;

/// Row vector of state probabilities: entries >= 0 summing to one.
template <typename Scalar>
class ProbabilityVector {
 public:
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit ProbabilityVector(Row pi, Scalar tolerance = Scalar(1e-12))
      : pi_(std::move(pi)) {
    if (pi_.size() == 0) throw DomainError("probability vector: empty");
    for (Index i = 0; i < pi_.size(); ++i) {
      if (!(pi_(i) >= 0) || !std::isfinite(pi_(i))) {
        throw DomainError("probability vector: entries must be finite and >= 0");
      }
    }
    if (std::abs(pi_.sum() - Scalar(1)) > tolerance) {
      throw DomainError("probability vector: entries must sum to 1");
    }
  }

  static ProbabilityVector point_mass(Index n, Index state) {
    if (state < 0 || state >= n) throw DomainError("probability vector: state out of range");
    Row pi = Row::Zero(n);
    pi(state) = 1;
    return ProbabilityVector(std::move(pi));
  }

  const Row& values() const { return pi_; }
  Index size() const { return pi_.size(); }
  Scalar operator[](Index i) const { return pi_(i); }

 private:
  Row pi_;
};

/// One-step matrix P = I + dt*Q of the discretised chain.
template <typename Scalar>
struct TransitionMatrix {
  typename Ctmc<Scalar>::Matrix probs;
  Scalar dt;
};

struct MetricsBundle {
  double mttf = 0;
  double mttr = 0;
  double availability = 0;
  Method method = Method::analytic;
};

// ---------------------------------------------------------------------------
// Construction

/// s0 = up (operational), s1 = down; s0 -> s1 at lambda, s1 -> s0 at mu.
template <typename Scalar>
Ctmc<Scalar> build_two_state(Scalar lambda, Scalar mu) {
  if (!(lambda > 0) || !std::isfinite(lambda) || !(mu > 0) || !std::isfinite(mu)) {
    throw DomainError("two-state chain: failure and repair rates must be positive");
  }
  typename Ctmc<Scalar>::Matrix rates(2, 2);
  rates << 0, lambda, mu, 0;
  return Ctmc<Scalar>(StateSpace({{"up", true}, {"down", false}}), rates);
}

/// Copy of `chain` with every outgoing rate of a non-operational state removed.
template <typename Scalar>
Ctmc<Scalar> make_absorbing(const Ctmc<Scalar>& chain) {
  typename Ctmc<Scalar>::Matrix rates = chain.generator();
  for (Index i = 0; i < chain.size(); ++i) {
    if (!chain.space().operational(i)) rates.row(i).setZero();
  }
  return Ctmc<Scalar>(chain.space(), rates);
}

template <typename Scalar>
TransitionMatrix<Scalar> discretize(const Ctmc<Scalar>& chain, Scalar dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("discretize: dt must be positive");
  if (dt * chain.max_exit_rate() > 1) {
    throw StepTooLargeError("discretize: dt * max exit rate exceeds 1");
  }
  const Index n = chain.size();
  return {Ctmc<Scalar>::Matrix::Identity(n, n) + dt * chain.generator(), dt};
}

// ---------------------------------------------------------------------------
// Graph structure

/// States reachable from `sources` along positive rates. With `through`, the
/// search only expands sources and states where through[i] is true (other
/// states are marked when hit but not expanded). `reverse` walks edges
/// backwards.
template <typename Scalar>
std::vector<bool> reachable(const Ctmc<Scalar>& chain, const std::vector<Index>& sources,
                            const std::vector<bool>* through = nullptr,
                            bool reverse = false) {
  const Index n = chain.size();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<bool> is_source(static_cast<std::size_t>(n), false);
  std::deque<Index> queue;
  for (Index s : sources) {
    is_source[static_cast<std::size_t>(s)] = true;
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const Index i = queue.front();
    queue.pop_front();
    const auto u = static_cast<std::size_t>(i);
    if (through && !(*through)[u] && !is_source[u]) continue;
    for (Index j = 0; j < n; ++j) {
      if (i == j || seen[static_cast<std::size_t>(j)]) continue;
      const Scalar r = reverse ? chain.rate(j, i) : chain.rate(i, j);
      if (r > 0) {
        seen[static_cast<std::size_t>(j)] = true;
        queue.push_back(j);
      }
    }
  }
  return seen;
}

template <typename Scalar>
bool is_irreducible(const Ctmc<Scalar>& chain) {
  const auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  return all(reachable(chain, {0})) && all(reachable(chain, {0}, nullptr, true));
}

// ---------------------------------------------------------------------------
// Steady state

/// Solves pi Q = 0, sum(pi) = 1 by a dense LU solve of Q^T with its last row
/// replaced by the normalisation constraint.
template <typename Scalar>
ProbabilityVector<Scalar> steady_state(const Ctmc<Scalar>& chain) {
  using Row = typename ProbabilityVector<Scalar>::Row;
  using Matrix = typename Ctmc<Scalar>::Matrix;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = chain.size();
  if (n == 1) return ProbabilityVector<Scalar>(Row::Ones(1));
  if (!is_irreducible(chain)) {
    throw ReducibleChainError("steady_state: chain is not irreducible");
  }
  Matrix a = chain.generator().transpose();
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1;
  const Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw SingularSystemError("steady_state: singular balance system");
  Vector pi = lu.solve(b);
  // Irreducible chains have a strictly positive solution; only rounding
  // noise can be negative here.
  pi = pi.cwiseMax(Scalar(0));
  pi /= pi.sum();
  return ProbabilityVector<Scalar>(Row(pi.transpose()));
}

template <typename Scalar>
Scalar operational_mass(const StateSpace& space, const ProbabilityVector<Scalar>& pi) {
  Scalar sum = 0;
  for (Index i = 0; i < space.size(); ++i) {
    if (space.operational(i)) sum += pi[i];
  }
  return sum;
}

template <typename Scalar>
Scalar availability_steady(const Ctmc<Scalar>& chain) {
  return operational_mass(chain.space(), steady_state(chain));
}

/// mu / (lambda + mu) for the two-state up/down model.
template <typename Scalar>
Scalar availability_two_state(Scalar lambda, Scalar mu) {
  if (!(lambda > 0) || !std::isfinite(lambda) || !(mu > 0) || !std::isfinite(mu)) {
    throw DomainError("availability_two_state: rates must be positive");
  }
  return mu / (lambda + mu);
}

// ---------------------------------------------------------------------------
// Transient solution by uniformisation

/// Poisson(rate) probabilities on the window [left, left + weights.size()),
/// normalised over the window. The mass outside the window is below
/// `epsilon` (bounded with geometric tail estimates on both sides).
template <typename Scalar>
struct PoissonWindow {
  Index left = 0;
  std::vector<Scalar> weights;
  Scalar tail_bound = 0;
};

template <typename Scalar>
PoissonWindow<Scalar> poisson_window(Scalar rate, Scalar epsilon) {
  if (!(rate >= 0) || !std::isfinite(rate)) throw DomainError("poisson_window: bad rate");
  const auto mode = static_cast<Index>(std::floor(rate));
  std::deque<Scalar> w{Scalar(1)};
  Scalar sum = 1;
  Scalar right_bound = 0;
  Scalar left_bound = 0;

  // Right: ratio w_{k+1}/w_k = rate/(k+1) < 1 for k >= mode.
  for (Index k = mode;; ++k) {
    const Scalar next = w.back() * rate / static_cast<Scalar>(k + 1);
    w.push_back(next);
    sum += next;
    const Scalar ratio = rate / static_cast<Scalar>(k + 2);
    right_bound = next * ratio / (Scalar(1) - ratio);
    if (right_bound <= epsilon / 2 * sum) break;
  }
  // Left: ratio w_{k-1}/w_k = k/rate < 1 for k <= mode.
  Index left = mode;
  while (left > 0) {
    const Scalar next = w.front() * static_cast<Scalar>(left) / rate;
    w.push_front(next);
    sum += next;
    --left;
    if (left == 0) {
      left_bound = 0;
      break;
    }
    const Scalar ratio = static_cast<Scalar>(left) / rate;
    left_bound = next * ratio / (Scalar(1) - ratio);
    if (left_bound <= epsilon / 2 * sum) break;
  }

  PoissonWindow<Scalar> window;
  window.left = left;
  window.weights.reserve(w.size());
  for (Scalar x : w) window.weights.push_back(x / sum);
  window.tail_bound = (left_bound + right_bound) / sum;
  return window;
}

/// pi(t) = pi0 exp(Q t), truncation error below `epsilon`.
template <typename Scalar>
ProbabilityVector<Scalar> transient(const Ctmc<Scalar>& chain,
                                    const ProbabilityVector<Scalar>& pi0, Scalar t,
                                    Scalar epsilon = Scalar(1e-12)) {
  using Row = typename ProbabilityVector<Scalar>::Row;
  using Matrix = typename Ctmc<Scalar>::Matrix;
  if (pi0.size() != chain.size()) throw DomainError("transient: pi0 has wrong length");
  if (!(t >= 0) || !std::isfinite(t)) throw DomainError("transient: t must be finite and >= 0");
  const Scalar q = chain.max_exit_rate();
  if (t == 0 || q == 0) return pi0;
  const Scalar poisson_rate = q * t;
  if (poisson_rate > Scalar(1e8)) {
    throw DomainError("transient: q*t too large for uniformisation; use steady_state");
  }
  const Index n = chain.size();
  const Matrix p = Matrix::Identity(n, n) + chain.generator() / q;
  const PoissonWindow<Scalar> window = poisson_window(poisson_rate, epsilon);

  Row v = pi0.values();
  for (Index k = 0; k < window.left; ++k) v = v * p;
  Row acc = window.weights.front() * v;
  for (std::size_t k = 1; k < window.weights.size(); ++k) {
    v = v * p;
    acc += window.weights[k] * v;
  }
  acc = acc.cwiseMax(Scalar(0));
  acc /= acc.sum();
  return ProbabilityVector<Scalar>(std::move(acc), Scalar(1e-9));
}

/// Point availability: operational mass of pi(t) with repairs allowed.
template <typename Scalar>
Scalar availability_at(const Ctmc<Scalar>& chain, const ProbabilityVector<Scalar>& pi0,
                       Scalar t) {
  return operational_mass(chain.space(), transient(chain, pi0, t));
}

/// Probability of never having left the operational set by t: the
/// operational mass of pi(t) on the chain with failure states absorbing.
template <typename Scalar>
Scalar reliability_at(const Ctmc<Scalar>& chain, const ProbabilityVector<Scalar>& pi0,
                      Scalar t) {
  if (!chain.space().has_failure_states()) {
    throw DomainError("reliability_at: chain has no non-operational state");
  }
  return operational_mass(chain.space(), transient(make_absorbing(chain), pi0, t));
}

// ---------------------------------------------------------------------------
// Mean times

/// Sum over operational states of 1/lambda_i, lambda_i being the total rate
/// from state i straight into non-operational states.
template <typename Scalar>
Scalar mttf_rate_sum(const Ctmc<Scalar>& chain) {
  const StateSpace& space = chain.space();
  if (!space.has_failure_states()) {
    throw UnreachableError("mttf_rate_sum: chain has no non-operational state");
  }
  Scalar total = 0;
  for (Index i = 0; i < chain.size(); ++i) {
    if (!space.operational(i)) continue;
    Scalar lambda = 0;
    for (Index j = 0; j < chain.size(); ++j) {
      if (!space.operational(j)) lambda += chain.rate(i, j);
    }
    if (!(lambda > 0)) {
      throw UnreachableError("mttf_rate_sum: operational state '" + space[i].label +
                             "' has no failure transition");
    }
    total += Scalar(1) / lambda;
  }
  return total;
}

/// Expected time for the chain started in `start` to first enter a state
/// with target[i] == true.
template <typename Scalar>
Scalar expected_hitting_time(const Ctmc<Scalar>& chain, Index start,
                             const std::vector<bool>& target) {
  using Matrix = typename Ctmc<Scalar>::Matrix;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = chain.size();
  if (start < 0 || start >= n) throw DomainError("hitting time: start state out of range");
  if (target[static_cast<std::size_t>(start)]) return Scalar(0);

  std::vector<bool> transient_set(target.size());
  std::vector<Index> targets;
  for (Index i = 0; i < n; ++i) {
    transient_set[static_cast<std::size_t>(i)] = !target[static_cast<std::size_t>(i)];
    if (target[static_cast<std::size_t>(i)]) targets.push_back(i);
  }
  const std::vector<bool> from_start = reachable(chain, {start}, &transient_set);
  const std::vector<bool> to_target = reachable(chain, targets, &transient_set, true);

  std::vector<Index> ids;
  for (Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (!from_start[u] || target[u]) continue;
    if (!to_target[u]) {
      throw UnreachableError("hitting time: target set unreachable from state '" +
                             chain.space()[i].label + "'");
    }
    ids.push_back(i);
  }

  const auto m = static_cast<Index>(ids.size());
  Matrix a(m, m);
  for (Index r = 0; r < m; ++r) {
    for (Index c = 0; c < m; ++c) a(r, c) = -chain.rate(ids[r], ids[c]);
  }
  const Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw SingularSystemError("hitting time: singular system");
  const Vector tau = lu.solve(Vector::Ones(m));
  const auto pos = std::find(ids.begin(), ids.end(), start) - ids.begin();
  return tau(pos);
}

/// Mean time to failure from an operational start, failure states absorbing
/// and repairs among operational states retained.
template <typename Scalar>
Scalar mttf_absorbing(const Ctmc<Scalar>& chain, Index start) {
  if (start < 0 || start >= chain.size() || !chain.space().operational(start)) {
    throw DomainError("mttf_absorbing: start must be an operational state");
  }
  std::vector<bool> failed = chain.space().operational_mask();
  failed.flip();
  return expected_hitting_time(chain, start, failed);
}

/// Mean time to repair from a failed state: hitting time of the operational set.
template <typename Scalar>
Scalar mttr(const Ctmc<Scalar>& chain, Index failed) {
  if (failed < 0 || failed >= chain.size() || chain.space().operational(failed)) {
    throw DomainError("mttr: state must be non-operational");
  }
  return expected_hitting_time(chain, failed, chain.space().operational_mask());
}

/// Steady-state mean down time: per-state MTTR weighted by the long-run
/// frequency of entering each failed state from the operational set.
template <typename Scalar>
Scalar mean_down_time(const Ctmc<Scalar>& chain) {
  const StateSpace& space = chain.space();
  const ProbabilityVector<Scalar> pi = steady_state(chain);
  Scalar weighted = 0;
  Scalar frequency = 0;
  for (Index j = 0; j < chain.size(); ++j) {
    if (space.operational(j)) continue;
    Scalar entry = 0;
    for (Index i = 0; i < chain.size(); ++i) {
      if (space.operational(i)) entry += pi[i] * chain.rate(i, j);
    }
    if (entry > 0) {
      weighted += entry * mttr(chain, j);
      frequency += entry;
    }
  }
  if (!(frequency > 0)) throw UnreachableError("mean_down_time: no failure transitions");
  return weighted / frequency;
}

/// MTTF from `start` (absorbing solve), steady-state mean down time and
/// steady-state availability.
template <typename Scalar>
MetricsBundle analytic_metrics(const Ctmc<Scalar>& chain, Index start) {
  MetricsBundle bundle;
  bundle.mttf = static_cast<double>(mttf_absorbing(chain, start));
  bundle.mttr = static_cast<double>(mean_down_time(chain));
  bundle.availability = static_cast<double>(availability_steady(chain));
  bundle.method = Method::analytic;
  return bundle;
}

}  // namespace securakit
