#include "securakit/method.hpp"

#include <array>
#include <utility>

namespace securakit {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 5> kNames{{
    {Method::analytic, "analytic"},
    {Method::paper_rate_sum, "paper_rate_sum"},
    {Method::monte_carlo, "monte_carlo"},
    {Method::rank_regression, "rank_regression"},
    {Method::mle, "mle"},
}};

}  // namespace

std::string to_string(Method method) {
  for (const auto& [m, name] : kNames) {
    if (m == method) return std::string(name);
  }
  return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
  for (const auto& [m, n] : kNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

}  // namespace securakit
