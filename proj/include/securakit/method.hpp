#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace securakit {

/// How a reported number was obtained.
enum class Method { analytic, paper_rate_sum, monte_carlo, rank_regression, mle };

std::string to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

}  // namespace securakit
