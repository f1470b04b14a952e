#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "securakit/errors.hpp"
#include "securakit/markov.hpp"
#include "securakit/report.hpp"
#include "securakit/securability.hpp"
#include "securakit/weibull.hpp"

namespace securakit {

enum class ModelKind { weibull, markov, msdr, r_out_of_n };

std::string to_string(ModelKind kind);

struct Diagnostic {
  enum class Kind { syntax, schema, semantic, io };
  Kind kind;
  /// JSON pointer to the offending key ("/" for the whole document).
  std::string path;
  std::string message;
};

std::string to_string(Diagnostic::Kind kind);

/// Every problem found in a document. Always a validation-class error.
class ModelError : public Error {
 public:
  explicit ModelError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Evenly spaced times t0..t1 with `points` entries (t0 alone if points == 1).
struct TimeGrid {
  double t0 = 0;
  double t1 = 0;
  int points = 1;

  std::vector<double> values() const;
};

/// Parses "t0:t1:points". Returns nullopt on malformed text or bad ranges.
std::optional<TimeGrid> parse_grid(std::string_view text);

/// Requested analyses and their settings. Absent keys stay empty.
struct AnalysisSettings {
  std::optional<double> horizon;
  std::optional<std::uint64_t> n_trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> threshold;
  std::vector<double> times;
  std::optional<TimeGrid> grid;
  std::optional<double> warmup;
  std::optional<std::string> method;
  std::optional<std::uint64_t> max_events;
};

struct WeibullParams {
  std::optional<WeibullModeld> model;
  std::optional<FailureSample> data;
};

struct MarkovParams {
  Ctmcd chain;
  Index initial = 0;
  /// Set when the document used the two-state lambda/mu shorthand.
  std::optional<double> lambda;
  std::optional<double> mu;
};

struct MsDrParams {
  MsDrRates rates;
  RepairPolicy policy = RepairPolicy::concurrent;
  std::vector<ThreatProfile> threats;
};

struct RoutOfNParams {
  RoutOfNSystem system;
};

struct ModelDocument {
  ModelKind kind;
  std::string time_unit;
  AnalysisSettings analyses;
  std::variant<WeibullParams, MarkovParams, MsDrParams, RoutOfNParams> model;
  /// Validated input, normalised (sorted keys), echoed into reports.
  nlohmann::json echo;
};

/// Parses and validates a model document. Throws ModelError listing every
/// violation found.
ModelDocument parse_model(std::string_view text);
ModelDocument parse_model_file(const std::filesystem::path& path);

enum class ReportFormat { json, csv, table };

std::optional<ReportFormat> format_from_string(std::string_view name);

nlohmann::json report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& doc);

/// JSON is lossless; CSV has one row per result and a `t,value` section
/// per series; table is fixed-width text.
std::string emit_report(const AnalysisReport& report, ReportFormat format);

}  // namespace securakit
