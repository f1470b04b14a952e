#include "securakit/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

namespace securakit {

FailureSample::FailureSample(std::vector<double> times)
    : FailureSample(times, std::vector<bool>(times.size(), false)) {}

FailureSample::FailureSample(std::vector<double> times,
                             std::vector<bool> censored)
    : times_(std::move(times)), censored_(std::move(censored)) {
  if (times_.empty()) {
    throw DomainError("failure sample: at least one time is required");
  }
  if (censored_.size() != times_.size()) {
    throw DomainError("failure sample: censored flags must match times");
  }
  for (double t : times_) {
    if (!(t > 0) || !std::isfinite(t)) {
      throw DomainError("failure sample: every time must be positive and finite");
    }
  }
}

std::size_t FailureSample::failure_count() const {
  return static_cast<std::size_t>(
      std::count(censored_.begin(), censored_.end(), false));
}

std::string to_string(FitMethod method) {
  switch (method) {
    case FitMethod::rank_regression: return "rank_regression";
    case FitMethod::mle: return "mle";
  }
  return "unknown";
}

FitResult fit_rank_regression(const FailureSample& data) {
  std::vector<std::string> warnings;
  std::vector<double> failures;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.censored()[i]) failures.push_back(data.times()[i]);
  }
  if (failures.size() != data.size()) {
    warnings.push_back("rank_regression: ignored " +
                       std::to_string(data.size() - failures.size()) +
                       " censored observation(s)");
  }
  if (failures.size() < 3) {
    throw DomainError("rank_regression: at least 3 uncensored failures required");
  }
  std::sort(failures.begin(), failures.end());
  if (failures.front() == failures.back()) {
    throw DegenerateDataError("weibull fit: all failure times are equal");
  }

  const auto n = static_cast<Eigen::Index>(failures.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rank = (static_cast<double>(i + 1) - 0.3) / (static_cast<double>(n) + 0.4);
    design(i, 0) = std::log(failures[static_cast<std::size_t>(i)]);
    design(i, 1) = 1.0;
    y(i) = std::log(-std::log1p(-rank));
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
  const double beta = coef(0);
  if (!(beta > 0) || !std::isfinite(beta)) {
    throw DegenerateDataError("rank_regression: non-positive slope");
  }
  const double alpha = std::exp(-coef(1) / beta);

  const Eigen::VectorXd residual = y - design * coef;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  FitResult result{WeibullModeld(alpha, beta), FitMethod::rank_regression};
  result.r_squared = ss_tot > 0 ? 1.0 - residual.squaredNorm() / ss_tot : 1.0;
  result.warnings = std::move(warnings);
  return result;
}

namespace {

// Sums over the sample with times rescaled by the largest observation so
// that s^beta stays in (0, 1].
struct ProfileSums {
  double sum_pow = 0;       // sum s^b
  double sum_pow_log = 0;   // sum s^b ln s
  double sum_pow_log2 = 0;  // sum s^b (ln s)^2
};

class ProfileScore {
 public:
  explicit ProfileScore(const FailureSample& data) {
    t_max_ = *std::max_element(data.times().begin(), data.times().end());
    log_s_.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double ls = std::log(data.times()[i] / t_max_);
      log_s_.push_back(ls);
      if (!data.censored()[i]) {
        mean_log_failure_ += ls;
        ++failures_;
      }
    }
    if (failures_ > 0) mean_log_failure_ /= static_cast<double>(failures_);
  }

  ProfileSums sums(double beta) const {
    ProfileSums s;
    for (double ls : log_s_) {
      const double w = std::exp(beta * ls);
      s.sum_pow += w;
      s.sum_pow_log += w * ls;
      s.sum_pow_log2 += w * ls * ls;
    }
    return s;
  }

  // g(b) = sum s^b ln s / sum s^b - 1/b - mean(ln s over failures)
  double value(double beta) const {
    const ProfileSums s = sums(beta);
    return s.sum_pow_log / s.sum_pow - 1.0 / beta - mean_log_failure_;
  }

  double derivative(double beta) const {
    const ProfileSums s = sums(beta);
    const double ratio = s.sum_pow_log / s.sum_pow;
    return s.sum_pow_log2 / s.sum_pow - ratio * ratio + 1.0 / (beta * beta);
  }

  double alpha(double beta) const {
    const ProfileSums s = sums(beta);
    return t_max_ * std::pow(s.sum_pow / static_cast<double>(failures_), 1.0 / beta);
  }

  double mean_log_failure() const { return mean_log_failure_; }
  std::size_t failures() const { return failures_; }

 private:
  std::vector<double> log_s_;
  double t_max_ = 1;
  double mean_log_failure_ = 0;
  std::size_t failures_ = 0;
};

}  // namespace

double mle_profile_score(const FailureSample& data, double beta) {
  if (!(beta > 0)) throw DomainError("mle score: beta must be positive");
  return ProfileScore(data).value(beta);
}

FitResult fit_mle(const FailureSample& data, const FitOptions& options) {
  const ProfileScore score(data);
  if (score.failures() == 0) {
    throw DomainError("mle: at least one uncensored failure required");
  }
  const auto [lo_it, hi_it] =
      std::minmax_element(data.times().begin(), data.times().end());
  if (*lo_it == *hi_it) {
    throw DegenerateDataError("weibull fit: all failure times are equal");
  }
  // If every failure sits at the largest time the score tends to 0 from
  // below and the likelihood increases without bound in beta.
  if (score.mean_log_failure() == 0.0) {
    throw DegenerateDataError("mle: all failures coincide with the largest time");
  }

  // g is increasing in beta: -inf as beta -> 0, positive limit as beta -> inf.
  double lo = 1.0;
  while (score.value(lo) > 0) lo *= 0.5;
  double hi = 1.0;
  while (score.value(hi) < 0) {
    hi *= 2.0;
    if (hi > 1e8) throw ConvergenceError("mle: could not bracket the shape parameter");
  }

  double beta = 1.0;
  if (data.failure_count() >= 3) {
    try {
      const double guess = fit_rank_regression(data).model.beta();
      if (guess > lo && guess < hi) beta = guess;
    } catch (const Error&) {
      // fall back to the bracket midpoint
    }
  }
  if (!(beta > lo && beta < hi)) beta = 0.5 * (lo + hi);

  int iteration = 0;
  double g = score.value(beta);
  while (std::abs(g) >= options.score_tolerance) {
    if (++iteration > options.max_iterations) {
      throw ConvergenceError("mle: no convergence after " +
                             std::to_string(options.max_iterations) +
                             " iterations");
    }
    if (g < 0) lo = beta; else hi = beta;
    double next = beta - g / score.derivative(beta);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == beta) break;
    beta = next;
    g = score.value(beta);
  }

  FitResult result{WeibullModeld(score.alpha(beta), beta), FitMethod::mle};
  result.iterations = iteration;
  result.score = g;
  return result;
}

FitResult fit(const FailureSample& data, FitMethod method,
              const FitOptions& options) {
  switch (method) {
    case FitMethod::rank_regression: return fit_rank_regression(data);
    case FitMethod::mle: return fit_mle(data, options);
  }
  throw DomainError("weibull fit: unknown method");
}

}  // namespace securakit
