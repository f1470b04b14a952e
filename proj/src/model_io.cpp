#include "securakit/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace securakit {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::weibull: return "weibull";
    case ModelKind::markov: return "markov";
    case ModelKind::msdr: return "msdr";
    case ModelKind::r_out_of_n: return "r_out_of_n";
  }
  return "unknown";
}

std::string to_string(Diagnostic::Kind kind) {
  switch (kind) {
    case Diagnostic::Kind::syntax: return "syntax";
    case Diagnostic::Kind::schema: return "schema";
    case Diagnostic::Kind::semantic: return "semantic";
    case Diagnostic::Kind::io: return "io";
  }
  return "unknown";
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  if (diagnostics.empty()) return "invalid model document";
  std::string s = diagnostics.front().path + ": " + diagnostics.front().message;
  if (diagnostics.size() > 1) {
    s += " (+" + std::to_string(diagnostics.size() - 1) + " more)";
  }
  return s;
}

}  // namespace

ModelError::ModelError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorCategory::validation, summarize(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

std::vector<double> TimeGrid::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  if (points == 1) {
    out.push_back(t0);
    return out;
  }
  for (int i = 0; i < points; ++i) {
    out.push_back(i + 1 == points ? t1 : t0 + (t1 - t0) * i / (points - 1));
  }
  return out;
}

std::optional<TimeGrid> parse_grid(std::string_view text) {
  const auto first = text.find(':');
  if (first == std::string_view::npos) return std::nullopt;
  const auto second = text.find(':', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  const auto to_double = [](std::string_view s) -> std::optional<double> {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  };
  const auto t0 = to_double(text.substr(0, first));
  const auto t1 = to_double(text.substr(first + 1, second - first - 1));
  const std::string_view count = text.substr(second + 1);
  int points = 0;
  const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), points);
  if (!t0 || !t1 || ec != std::errc() || ptr != count.data() + count.size()) return std::nullopt;
  if (*t0 < 0 || *t1 < *t0 || points < 1 || points > 1'000'000) return std::nullopt;
  return TimeGrid{*t0, *t1, points};
}

namespace {

// ---------------------------------------------------------------------------
// Validation helpers. Every check appends to `diags` and keeps going so one
// run reports every violation.

class Checker {
 public:
  std::vector<Diagnostic> diags;

  void schema(const std::string& path, std::string message) {
    diags.push_back({Diagnostic::Kind::schema, path, std::move(message)});
  }
  void semantic(const std::string& path, std::string message) {
    diags.push_back({Diagnostic::Kind::semantic, path, std::move(message)});
  }

  static std::string join(const std::string& path, const std::string& key) {
    std::string escaped;
    for (char c : key) {
      if (c == '~') escaped += "~0";
      else if (c == '/') escaped += "~1";
      else escaped += c;
    }
    return path + "/" + escaped;
  }
  static std::string join(const std::string& path, std::size_t index) {
    return path + "/" + std::to_string(index);
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    schema(path.empty() ? "/" : path, "expected an object");
    return false;
  }

  void allowed_keys(const json& obj, const std::string& path,
                    std::initializer_list<const char*> keys) {
    for (const auto& item : obj.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(),
                                     [&](const char* k) { return item.key() == k; });
      if (!known) schema(join(path, item.key()), "unknown key '" + item.key() + "'");
    }
  }

  const json* member(const json& obj, const std::string& path, const char* key,
                     bool required) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) schema(join(path, key), std::string("missing required key '") + key + "'");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key,
                               bool required) {
    const json* v = member(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      schema(join(path, key), "expected a number");
      return std::nullopt;
    }
    if (!std::isfinite(v->get<double>())) {
      semantic(join(path, key), std::string("'") + key + "' must be finite");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<double> positive(const json& obj, const std::string& path, const char* key,
                                 bool required) {
    auto v = number(obj, path, key, required);
    if (v && !(*v > 0)) {
      semantic(join(path, key), std::string("'") + key + "' must be > 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> nonnegative(const json& obj, const std::string& path, const char* key,
                                    bool required) {
    auto v = number(obj, path, key, required);
    if (v && !(*v >= 0)) {
      semantic(join(path, key), std::string("'") + key + "' must be >= 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> probability(const json& obj, const std::string& path, const char* key,
                                    bool required) {
    auto v = number(obj, path, key, required);
    if (v && !(*v >= 0 && *v <= 1)) {
      semantic(join(path, key), std::string("'") + key + "' must lie in [0, 1]");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::uint64_t> unsigned_integer(const json& obj, const std::string& path,
                                                const char* key, bool required,
                                                std::uint64_t min_value) {
    const json* v = member(obj, path, key, required);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) {
      const auto u = v->get<std::uint64_t>();
      if (u < min_value) {
        semantic(join(path, key), std::string("'") + key + "' must be >= " +
                                      std::to_string(min_value));
        return std::nullopt;
      }
      return u;
    }
    if (v->is_number_integer()) {
      semantic(join(path, key), std::string("'") + key + "' must be nonnegative");
      return std::nullopt;
    }
    schema(join(path, key), "expected an integer");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& obj, const std::string& path, const char* key,
                                    bool required) {
    const json* v = member(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      schema(join(path, key), "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& path, const char* key,
                              bool required) {
    const json* v = member(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      schema(join(path, key), "expected true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  const json* array(const json& obj, const std::string& path, const char* key, bool required,
                    bool nonempty) {
    const json* v = member(obj, path, key, required);
    if (!v) return nullptr;
    if (!v->is_array()) {
      schema(join(path, key), "expected an array");
      return nullptr;
    }
    if (nonempty && v->empty()) {
      semantic(join(path, key), std::string("'") + key + "' must not be empty");
      return nullptr;
    }
    return v;
  }
};

// ---------------------------------------------------------------------------
// Analyses

AnalysisSettings read_analyses(Checker& c, const json& doc) {
  AnalysisSettings a;
  const std::string path = "/analyses";
  const json* node = c.member(doc, "", "analyses", false);
  if (!node) return a;
  if (!c.object(*node, path)) return a;
  const json& obj = *node;
  c.allowed_keys(obj, path,
                 {"horizon", "n_trials", "seed", "dt", "threshold", "t", "grid", "warmup",
                  "method", "max_events"});
  a.horizon = c.nonnegative(obj, path, "horizon", false);
  a.n_trials = c.unsigned_integer(obj, path, "n_trials", false, 1);
  a.seed = c.unsigned_integer(obj, path, "seed", false, 0);
  a.dt = c.positive(obj, path, "dt", false);
  if (auto th = c.number(obj, path, "threshold", false)) {
    if (*th > 0 && *th <= 1) a.threshold = th;
    else c.semantic(path + "/threshold", "'threshold' must lie in (0, 1]");
  }
  if (const json* t = c.member(obj, path, "t", false)) {
    const auto check_time = [&](const json& v, const std::string& p) {
      if (!v.is_number()) {
        c.schema(p, "expected a number");
      } else if (!(v.get<double>() >= 0)) {
        c.semantic(p, "times must be >= 0");
      } else {
        a.times.push_back(v.get<double>());
      }
    };
    if (t->is_array()) {
      if (t->empty()) c.semantic(path + "/t", "'t' must not be empty");
      for (std::size_t i = 0; i < t->size(); ++i) check_time((*t)[i], Checker::join(path + "/t", i));
    } else {
      check_time(*t, path + "/t");
    }
  }
  if (const json* g = c.member(obj, path, "grid", false)) {
    if (!g->is_string()) {
      c.schema(path + "/grid", "expected a string 't0:t1:points'");
    } else if (auto grid = parse_grid(g->get<std::string>())) {
      a.grid = grid;
    } else {
      c.semantic(path + "/grid", "grid must be 't0:t1:points' with 0 <= t0 <= t1, points >= 1");
    }
  }
  a.warmup = c.nonnegative(obj, path, "warmup", false);
  if (auto m = c.string(obj, path, "method", false)) {
    if (*m == "rank_regression" || *m == "mle" || *m == "both") a.method = m;
    else c.semantic(path + "/method", "method must be 'rank_regression', 'mle' or 'both'");
  }
  a.max_events = c.unsigned_integer(obj, path, "max_events", false, 1);
  return a;
}

// ---------------------------------------------------------------------------
// Per-kind parameters

std::optional<WeibullParams> read_weibull(Checker& c, const json& p, const std::string& path) {
  c.allowed_keys(p, path, {"alpha", "beta", "data"});
  const std::size_t before = c.diags.size();
  WeibullParams out;
  const bool has_alpha = p.contains("alpha");
  const bool has_beta = p.contains("beta");
  const bool has_data = p.contains("data");
  if (!has_alpha && !has_beta && !has_data) {
    c.schema(path, "expected 'alpha' and 'beta', or 'data'");
  }
  if (has_alpha || has_beta) {
    const auto alpha = c.positive(p, path, "alpha", true);
    const auto beta = c.positive(p, path, "beta", true);
    if (alpha && beta) {
      if (std::isfinite(*alpha) && std::isfinite(*beta)) out.model.emplace(*alpha, *beta);
      else c.semantic(path, "alpha and beta must be finite");
    }
  }
  if (const json* data = c.member(p, path, "data", false)) {
    const std::string dpath = path + "/data";
    if (c.object(*data, dpath)) {
      c.allowed_keys(*data, dpath, {"times", "censored"});
      std::vector<double> times;
      std::vector<bool> censored;
      bool ok = true;
      if (const json* t = c.array(*data, dpath, "times", true, true)) {
        for (std::size_t i = 0; i < t->size(); ++i) {
          const std::string ip = Checker::join(dpath + "/times", i);
          if (!(*t)[i].is_number()) {
            c.schema(ip, "expected a number");
            ok = false;
          } else if (!((*t)[i].get<double>() > 0)) {
            c.semantic(ip, "failure times must be > 0");
            ok = false;
          } else {
            times.push_back((*t)[i].get<double>());
          }
        }
      } else {
        ok = false;
      }
      if (const json* cens = c.array(*data, dpath, "censored", false, false)) {
        for (std::size_t i = 0; i < cens->size(); ++i) {
          if (!(*cens)[i].is_boolean()) {
            c.schema(Checker::join(dpath + "/censored", i), "expected true or false");
            ok = false;
          } else {
            censored.push_back((*cens)[i].get<bool>());
          }
        }
        if (ok && censored.size() != times.size()) {
          c.semantic(dpath + "/censored", "'censored' must have one flag per time");
          ok = false;
        }
        if (ok && std::all_of(censored.begin(), censored.end(), [](bool b) { return b; })) {
          c.semantic(dpath + "/censored", "at least one uncensored failure is required");
          ok = false;
        }
      } else {
        censored.assign(times.size(), false);
      }
      if (ok) out.data.emplace(std::move(times), std::move(censored));
    }
  }
  if (c.diags.size() != before) return std::nullopt;
  return out;
}

struct ChainSpec {
  Ctmcd chain;
  Index initial;
  std::optional<double> lambda;
  std::optional<double> mu;
};

/// Either {lambda, mu} or {states, transitions[, initial]} inside `p`.
std::optional<ChainSpec> read_chain(Checker& c, const json& p, const std::string& path) {
  const std::size_t before = c.diags.size();
  const bool shorthand = p.contains("lambda") || p.contains("mu");
  const bool explicit_chain = p.contains("states") || p.contains("transitions");
  if (shorthand && explicit_chain) {
    c.schema(path, "use either 'lambda'/'mu' or 'states'/'transitions', not both");
    return std::nullopt;
  }
  if (shorthand) {
    const auto lambda = c.positive(p, path, "lambda", true);
    const auto mu = c.positive(p, path, "mu", true);
    if (p.contains("initial")) {
      c.schema(path + "/initial", "'initial' is only valid with explicit states");
    }
    if (!lambda || !mu || c.diags.size() != before) return std::nullopt;
    return ChainSpec{build_two_state(*lambda, *mu), 0, lambda, mu};
  }

  std::vector<State> states;
  const json* s = c.array(p, path, "states", true, true);
  if (s) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < s->size(); ++i) {
      const std::string ip = Checker::join(path + "/states", i);
      const json& item = (*s)[i];
      if (!c.object(item, ip)) continue;
      c.allowed_keys(item, ip, {"label", "operational"});
      const auto label = c.string(item, ip, "label", true);
      const auto operational = c.boolean(item, ip, "operational", true);
      if (label && label->empty()) c.semantic(ip + "/label", "label must not be empty");
      if (label && !label->empty() && !seen.insert(*label).second) {
        c.semantic(ip + "/label", "duplicate state label '" + *label + "'");
      }
      if (label && operational) states.push_back({*label, *operational});
    }
    if (states.size() == s->size() &&
        std::none_of(states.begin(), states.end(), [](const State& st) { return st.operational; })) {
      c.semantic(path + "/states", "at least one state must be operational");
    }
  }
  const auto index_of = [&](const std::string& label) -> std::optional<Index> {
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].label == label) return static_cast<Index>(i);
    }
    return std::nullopt;
  };

  std::vector<Ctmcd::Transition> transitions;
  if (const json* t = c.array(p, path, "transitions", true, false)) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const std::string ip = Checker::join(path + "/transitions", i);
      const json& item = (*t)[i];
      if (!c.object(item, ip)) continue;
      c.allowed_keys(item, ip, {"from", "to", "rate"});
      const auto from = c.string(item, ip, "from", true);
      const auto to = c.string(item, ip, "to", true);
      const auto rate = c.nonnegative(item, ip, "rate", true);
      std::optional<Index> fi, ti;
      if (from && !(fi = index_of(*from))) c.semantic(ip + "/from", "unknown state '" + *from + "'");
      if (to && !(ti = index_of(*to))) c.semantic(ip + "/to", "unknown state '" + *to + "'");
      if (fi && ti && *fi == *ti) c.semantic(ip, "self-transitions are not allowed");
      if (fi && ti && rate) transitions.push_back({*fi, *ti, *rate});
    }
  }

  Index initial = 0;
  if (auto init = c.string(p, path, "initial", false)) {
    if (auto idx = index_of(*init)) initial = *idx;
    else c.semantic(path + "/initial", "unknown state '" + *init + "'");
  }
  if (c.diags.size() != before) return std::nullopt;
  try {
    return ChainSpec{Ctmcd::from_transitions(StateSpace(std::move(states)), transitions),
                     initial, std::nullopt, std::nullopt};
  } catch (const DomainError& e) {
    c.semantic(path, e.what());
    return std::nullopt;
  }
}

std::optional<MarkovParams> read_markov(Checker& c, const json& p, const std::string& path) {
  c.allowed_keys(p, path, {"lambda", "mu", "states", "transitions", "initial"});
  auto spec = read_chain(c, p, path);
  if (!spec) return std::nullopt;
  return MarkovParams{std::move(spec->chain), spec->initial, spec->lambda, spec->mu};
}

std::optional<MsDrParams> read_msdr(Checker& c, const json& p, const std::string& path) {
  c.allowed_keys(p, path,
                 {"lambda_ms", "lambda_dr", "mu_ms", "mu_dr", "repair_policy", "threats"});
  const std::size_t before = c.diags.size();
  MsDrParams out;
  const auto lms = c.positive(p, path, "lambda_ms", true);
  const auto ldr = c.positive(p, path, "lambda_dr", true);
  const auto mms = c.positive(p, path, "mu_ms", true);
  const auto mdr = c.positive(p, path, "mu_dr", true);
  if (auto policy = c.string(p, path, "repair_policy", false)) {
    if (*policy == "concurrent") out.policy = RepairPolicy::concurrent;
    else if (*policy == "single_crew") out.policy = RepairPolicy::single_crew;
    else c.semantic(path + "/repair_policy", "repair_policy must be 'concurrent' or 'single_crew'");
  }
  if (const json* threats = c.array(p, path, "threats", false, false)) {
    for (std::size_t i = 0; i < threats->size(); ++i) {
      const std::string ip = Checker::join(path + "/threats", i);
      const json& item = (*threats)[i];
      if (!c.object(item, ip)) continue;
      c.allowed_keys(item, ip, {"attack_rate", "applies_to", "success_probability"});
      const auto rate = c.nonnegative(item, ip, "attack_rate", true);
      const auto target = c.string(item, ip, "applies_to", true);
      const auto success = c.probability(item, ip, "success_probability", false);
      if (target && *target != "ms" && *target != "dr" && *target != "MS" && *target != "DR") {
        c.semantic(ip + "/applies_to", "applies_to must be 'ms' or 'dr'");
      }
      if (rate && target) out.threats.push_back({*rate, *target, success.value_or(1.0)});
    }
  }
  if (c.diags.size() != before || !lms || !ldr || !mms || !mdr) return std::nullopt;
  out.rates = {*lms, *ldr, *mms, *mdr};
  return out;
}

std::optional<RoutOfNParams> read_r_out_of_n(Checker& c, const json& p, const std::string& path) {
  c.allowed_keys(p, path, {"r", "subsystems"});
  const std::size_t before = c.diags.size();
  const auto r = c.unsigned_integer(p, path, "r", true, 1);
  std::vector<Subsystem> subsystems;
  const json* subs = c.array(p, path, "subsystems", true, true);
  if (subs) {
    std::set<std::string> labels;
    for (std::size_t i = 0; i < subs->size(); ++i) {
      const std::string ip = Checker::join(path + "/subsystems", i);
      const json& item = (*subs)[i];
      if (!c.object(item, ip)) continue;
      c.allowed_keys(item, ip,
                     {"label", "availability", "lambda", "mu", "states", "transitions", "initial"});
      const auto label = c.string(item, ip, "label", true);
      if (label && !labels.insert(*label).second) {
        c.semantic(ip + "/label", "duplicate subsystem label '" + *label + "'");
      }
      const bool fixed = item.contains("availability");
      const bool chained = item.contains("lambda") || item.contains("mu") ||
                           item.contains("states") || item.contains("transitions");
      if (fixed && chained) {
        c.schema(ip, "use either 'availability' or a chain ('lambda'/'mu' or 'states'), not both");
        continue;
      }
      if (!fixed && !chained) {
        c.schema(ip, "expected 'availability', 'lambda'/'mu' or 'states'/'transitions'");
        continue;
      }
      if (fixed) {
        const auto a = c.probability(item, ip, "availability", true);
        if (label && a) subsystems.push_back(FixedSubsystem{*label, *a});
      } else if (auto spec = read_chain(c, item, ip)) {
        if (label) subsystems.push_back(ChainSubsystem{*label, std::move(spec->chain), spec->initial});
      }
    }
    if (r && *r > subs->size()) {
      c.semantic(path + "/r", "'r' must not exceed the number of subsystems (" +
                                  std::to_string(subs->size()) + ")");
    }
  }
  if (c.diags.size() != before || !r || !subs) return std::nullopt;
  try {
    return RoutOfNParams{RoutOfNSystem(static_cast<Index>(*r), std::move(subsystems))};
  } catch (const DomainError& e) {
    c.semantic(path, e.what());
    return std::nullopt;
  }
}

std::string strip_exception_prefix(std::string message) {
  if (!message.empty() && message.front() == '[') {
    const auto close = message.find("] ");
    if (close != std::string::npos) message.erase(0, close + 2);
  }
  return message;
}

}  // namespace

ModelDocument parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ModelError({{Diagnostic::Kind::syntax, "/", strip_exception_prefix(e.what())}});
  }

  Checker c;
  if (!doc.is_object()) {
    throw ModelError({{Diagnostic::Kind::schema, "/", "document must be a JSON object"}});
  }
  c.allowed_keys(doc, "", {"kind", "time_unit", "parameters", "analyses", "description"});
  std::optional<ModelKind> kind;
  if (auto k = c.string(doc, "", "kind", true)) {
    if (*k == "weibull") kind = ModelKind::weibull;
    else if (*k == "markov") kind = ModelKind::markov;
    else if (*k == "msdr") kind = ModelKind::msdr;
    else if (*k == "r_out_of_n") kind = ModelKind::r_out_of_n;
    else c.semantic("/kind", "unknown kind '" + *k + "' (expected weibull, markov, msdr or r_out_of_n)");
  }
  const std::string time_unit = c.string(doc, "", "time_unit", false).value_or("unspecified");
  c.string(doc, "", "description", false);
  AnalysisSettings analyses = read_analyses(c, doc);

  std::optional<decltype(ModelDocument::model)> model;
  const json* params = c.member(doc, "", "parameters", true);
  if (params && c.object(*params, "/parameters") && kind) {
    const std::string path = "/parameters";
    switch (*kind) {
      case ModelKind::weibull:
        if (auto m = read_weibull(c, *params, path)) model.emplace(std::move(*m));
        break;
      case ModelKind::markov:
        if (auto m = read_markov(c, *params, path)) model.emplace(std::move(*m));
        break;
      case ModelKind::msdr:
        if (auto m = read_msdr(c, *params, path)) model.emplace(std::move(*m));
        break;
      case ModelKind::r_out_of_n:
        if (auto m = read_r_out_of_n(c, *params, path)) model.emplace(std::move(*m));
        break;
    }
  }
  if (!c.diags.empty() || !model || !kind) {
    if (c.diags.empty()) c.schema("/", "invalid model document");
    throw ModelError(std::move(c.diags));
  }

  json echo = json::object();
  echo["kind"] = to_string(*kind);
  echo["time_unit"] = time_unit;
  echo["parameters"] = *params;
  if (doc.contains("analyses")) echo["analyses"] = doc["analyses"];
  return ModelDocument{*kind, time_unit, std::move(analyses), std::move(*model), std::move(echo)};
}

ModelDocument parse_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelError({{Diagnostic::Kind::io, "/", "cannot open '" + path.string() + "'"}});
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

// ---------------------------------------------------------------------------
// Reports

std::optional<ReportFormat> format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "table") return ReportFormat::table;
  return std::nullopt;
}

const ResultEntry* AnalysisReport::find(const std::string& metric) const {
  for (const auto& r : results) {
    if (r.metric == metric) return &r;
  }
  return nullptr;
}

const ResultEntry* AnalysisReport::find(const std::string& metric, Method method) const {
  for (const auto& r : results) {
    if (r.metric == metric && r.method == method) return &r;
  }
  return nullptr;
}

json report_to_json(const AnalysisReport& report) {
  json j = json::object();
  j["tool_version"] = report.tool_version;
  j["seed_used"] = report.seed_used ? json(*report.seed_used) : json(nullptr);
  j["time_unit"] = report.time_unit;
  j["model"] = report.model_echo;
  json results = json::array();
  for (const auto& r : report.results) {
    json e = {{"metric", r.metric}, {"value", r.value}, {"method", to_string(r.method)}};
    if (r.uncertainty) {
      e["uncertainty"] = {{"std_error", r.uncertainty->std_error},
                          {"ci95", {r.uncertainty->ci_low, r.uncertainty->ci_high}},
                          {"n_effective", r.uncertainty->n_effective}};
    }
    results.push_back(std::move(e));
  }
  j["results"] = std::move(results);
  json series = json::array();
  for (const auto& s : report.series) {
    json points = json::array();
    for (const auto& [t, v] : s.points) points.push_back({t, v});
    series.push_back({{"name", s.name}, {"method", to_string(s.method)}, {"points", std::move(points)}});
  }
  j["series"] = std::move(series);
  j["notes"] = report.notes;
  return j;
}

AnalysisReport report_from_json(const json& j) {
  const auto fail = [](const std::string& path, const std::string& message) {
    throw ModelError({{Diagnostic::Kind::schema, path, message}});
  };
  const auto method_of = [&](const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a method label");
    const auto m = method_from_string(v.get<std::string>());
    if (!m) fail(path, "unknown method label");
    return *m;
  };
  AnalysisReport report;
  try {
    report.tool_version = j.at("tool_version").get<std::string>();
    if (!j.at("seed_used").is_null()) report.seed_used = j.at("seed_used").get<std::uint64_t>();
    report.time_unit = j.at("time_unit").get<std::string>();
    report.model_echo = j.at("model");
    const json& results = j.at("results");
    for (std::size_t i = 0; i < results.size(); ++i) {
      const json& e = results[i];
      ResultEntry r;
      r.metric = e.at("metric").get<std::string>();
      r.value = e.at("value").get<double>();
      r.method = method_of(e.at("method"), "/results/" + std::to_string(i) + "/method");
      if (e.contains("uncertainty")) {
        const json& u = e.at("uncertainty");
        r.uncertainty = Uncertainty{u.at("std_error").get<double>(), u.at("ci95").at(0).get<double>(),
                                    u.at("ci95").at(1).get<double>(),
                                    u.at("n_effective").get<std::uint64_t>()};
      }
      report.results.push_back(std::move(r));
    }
    const json& series = j.at("series");
    for (std::size_t i = 0; i < series.size(); ++i) {
      Series s;
      s.name = series[i].at("name").get<std::string>();
      s.method = method_of(series[i].at("method"), "/series/" + std::to_string(i) + "/method");
      for (const auto& p : series[i].at("points")) {
        s.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
      report.series.push_back(std::move(s));
    }
    report.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail("/", strip_exception_prefix(e.what()));
  }
  return report;
}

namespace {

std::string format_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

std::string emit_csv(const AnalysisReport& report) {
  std::ostringstream out;
  out << "metric,value,method,std_error\n";
  for (const auto& r : report.results) {
    out << csv_field(r.metric) << ',' << format_g(r.value, 6) << ',' << to_string(r.method) << ',';
    if (r.uncertainty) out << format_g(r.uncertainty->std_error, 6);
    out << '\n';
  }
  for (const auto& s : report.series) {
    out << "\n# series " << s.name << " (" << to_string(s.method) << ")\n";
    out << "t,value\n";
    for (const auto& [t, v] : s.points) out << format_g(t, 6) << ',' << format_g(v, 6) << '\n';
  }
  return out.str();
}

std::string emit_table(const AnalysisReport& report) {
  std::size_t width = 6;
  for (const auto& r : report.results) width = std::max(width, r.metric.size());
  std::ostringstream out;
  out << "securakit " << report.tool_version;
  if (report.model_echo.contains("kind")) out << "  model: " << report.model_echo["kind"].get<std::string>();
  out << "  time unit: " << report.time_unit;
  if (report.seed_used) out << "  seed: " << *report.seed_used;
  out << "\n\n";
  out << std::left << std::setw(static_cast<int>(width)) << "metric" << "  " << std::setw(18)
      << "value" << "  " << std::setw(15) << "method" << "  std_error\n";
  out << std::string(width + 2 + 18 + 2 + 15 + 2 + 9, '-') << '\n';
  for (const auto& r : report.results) {
    out << std::left << std::setw(static_cast<int>(width)) << r.metric << "  " << std::setw(18)
        << format_g(r.value, 10) << "  " << std::setw(15) << to_string(r.method) << "  "
        << (r.uncertainty ? format_g(r.uncertainty->std_error, 4) : std::string("-")) << '\n';
  }
  for (const auto& s : report.series) {
    out << "\nseries " << s.name << " (" << to_string(s.method) << ")\n";
    out << std::left << std::setw(14) << "t" << "value\n";
    for (const auto& [t, v] : s.points) {
      out << std::left << std::setw(14) << format_g(t, 8) << format_g(v, 10) << '\n';
    }
  }
  if (!report.notes.empty()) {
    out << '\n';
    for (const auto& n : report.notes) out << "note: " << n << '\n';
  }
  return out.str();
}

}  // namespace

std::string emit_report(const AnalysisReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return emit_csv(report);
    case ReportFormat::table: return emit_table(report);
  }
  return {};
}

}  // namespace securakit
