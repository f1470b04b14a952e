#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "securakit/errors.hpp"

namespace securakit {

/**
 * Two-parameter Weibull failure law with scale alpha (time units) and shape
 * beta (dimensionless).
 *
 *    R(t) = exp(-(t/alpha)^beta)
 *
 * beta < 1 gives a decreasing hazard (infant mortality), beta = 1 the
 * exponential law with mean alpha, beta > 1 an increasing hazard (wear-out).
 */
template <typename Scalar>
class WeibullModel {
 public:
  WeibullModel(Scalar alpha, Scalar beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha > 0) || !std::isfinite(alpha)) {
      throw DomainError("weibull: scale alpha must be positive and finite");
    }
    if (!(beta > 0) || !std::isfinite(beta)) {
      throw DomainError("weibull: shape beta must be positive and finite");
    }
  }

  Scalar alpha() const { return alpha_; }
  Scalar beta() const { return beta_; }

 private:
  Scalar alpha_;
  Scalar beta_;
};

using WeibullModeld = WeibullModel<double>;

namespace detail {

template <typename Scalar>
void require_nonnegative_time(Scalar t, const char* fn) {
  if (!(t >= 0) || !std::isfinite(t)) {
    throw DomainError(std::string("weibull ") + fn +
                      ": time must be finite and >= 0");
  }
}

// (t/alpha)^beta evaluated as exp(beta * ln(t/alpha)).
template <typename Scalar>
Scalar scaled_power(Scalar t, const WeibullModel<Scalar>& m) {
  if (t == 0) return Scalar(0);
  return std::exp(m.beta() * std::log(t / m.alpha()));
}

}  // namespace detail

template <typename Scalar>
Scalar reliability(Scalar t, const WeibullModel<Scalar>& m) {
  detail::require_nonnegative_time(t, "reliability");
  return std::exp(-detail::scaled_power(t, m));
}

// Shares the exponent with reliability() so cdf + reliability == 1.
template <typename Scalar>
Scalar cdf(Scalar t, const WeibullModel<Scalar>& m) {
  return Scalar(1) - reliability(t, m);
}

/// Instantaneous failure rate (beta/alpha)(t/alpha)^(beta-1). Throws
/// SingularityError at t = 0 when beta < 1.
template <typename Scalar>
Scalar hazard(Scalar t, const WeibullModel<Scalar>& m) {
  detail::require_nonnegative_time(t, "hazard");
  if (m.beta() == 1) return Scalar(1) / m.alpha();
  if (t == 0) {
    if (m.beta() < 1) {
      throw SingularityError("weibull hazard: diverges at t = 0 for beta < 1");
    }
    return Scalar(0);
  }
  return (m.beta() / m.alpha()) *
         std::exp((m.beta() - 1) * std::log(t / m.alpha()));
}

template <typename Scalar>
Scalar pdf(Scalar t, const WeibullModel<Scalar>& m) {
  detail::require_nonnegative_time(t, "pdf");
  if (t == 0 && m.beta() < 1) {
    throw SingularityError("weibull pdf: diverges at t = 0 for beta < 1");
  }
  return hazard(t, m) * std::exp(-detail::scaled_power(t, m));
}

/// alpha * Gamma(1 + 1/beta).
template <typename Scalar>
Scalar mean_life(const WeibullModel<Scalar>& m) {
  return m.alpha() * std::tgamma(Scalar(1) + Scalar(1) / m.beta());
}

/// Inverse CDF: alpha * (-ln(1 - p))^(1/beta) for p in [0, 1).
template <typename Scalar>
Scalar quantile(Scalar p, const WeibullModel<Scalar>& m) {
  if (!(p >= 0) || !(p < 1)) {
    throw DomainError("weibull quantile: probability must be in [0, 1)");
  }
  return m.alpha() * std::pow(-std::log1p(-p), Scalar(1) / m.beta());
}

// ---------------------------------------------------------------------------
// Parameter estimation

/// Observed failure times with right-censoring flags.
class FailureSample {
 public:
  explicit FailureSample(std::vector<double> times);
  FailureSample(std::vector<double> times, std::vector<bool> censored);

  const std::vector<double>& times() const { return times_; }
  const std::vector<bool>& censored() const { return censored_; }
  std::size_t size() const { return times_.size(); }
  std::size_t failure_count() const;

 private:
  std::vector<double> times_;
  std::vector<bool> censored_;
};

enum class FitMethod { rank_regression, mle };

std::string to_string(FitMethod method);

struct FitOptions {
  double score_tolerance = 1e-10;
  int max_iterations = 100;
};

struct FitResult {
  FitResult(WeibullModeld fitted, FitMethod how) : model(fitted), method(how) {}

  WeibullModeld model;
  FitMethod method;
  int iterations = 0;
  /// Final profile score (mle) or zero for rank regression.
  double score = 0.0;
  /// Coefficient of determination of the linearised fit (rank regression).
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

/// Median-rank regression: least squares of ln(-ln(1-F)) on ln t with
/// Bernard plotting positions (i - 0.3) / (n + 0.4). Censored entries are
/// dropped with a warning. Needs at least 3 failures.
FitResult fit_rank_regression(const FailureSample& data);

/// Maximum likelihood with right-censoring. Newton iteration on the profile
/// score in beta, then alpha in closed form.
FitResult fit_mle(const FailureSample& data, const FitOptions& options = {});

FitResult fit(const FailureSample& data, FitMethod method,
              const FitOptions& options = {});

/// Profile-likelihood score in beta; zero at the MLE. Exposed for tests.
double mle_profile_score(const FailureSample& data, double beta);

}  // namespace securakit
