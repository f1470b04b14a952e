#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "securakit/method.hpp"

namespace securakit {

inline constexpr const char* kToolVersion = "0.1.0";

struct Uncertainty {
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::uint64_t n_effective = 0;

  bool operator==(const Uncertainty&) const = default;
};

struct ResultEntry {
  std::string metric;
  double value = 0;
  Method method = Method::analytic;
  std::optional<Uncertainty> uncertainty;

  bool operator==(const ResultEntry&) const = default;
};

/// Named (t, value) curve for plotting.
struct Series {
  std::string name;
  Method method = Method::analytic;
  std::vector<std::pair<double, double>> points;

  bool operator==(const Series&) const = default;
};

struct AnalysisReport {
  nlohmann::json model_echo = nlohmann::json::object();
  std::string time_unit;
  std::vector<ResultEntry> results;
  std::vector<Series> series;
  std::vector<std::string> notes;
  std::string tool_version = kToolVersion;
  std::optional<std::uint64_t> seed_used;

  void add(std::string metric, double value, Method method,
           std::optional<Uncertainty> uncertainty = std::nullopt) {
    results.push_back({std::move(metric), value, method, uncertainty});
  }

  /// First result with this metric name and method, if any.
  const ResultEntry* find(const std::string& metric) const;
  const ResultEntry* find(const std::string& metric, Method method) const;

  bool operator==(const AnalysisReport&) const = default;
};

}  // namespace securakit
