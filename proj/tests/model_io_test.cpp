#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "securakit/model_io.hpp"

using namespace securakit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const std::filesystem::path kData = SECURAKIT_TEST_DATA;

std::vector<Diagnostic> diagnostics_of(std::string_view text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return e.diagnostics();
  }
  return {};
}

bool has(const std::vector<Diagnostic>& ds, Diagnostic::Kind kind, const std::string& path) {
  return std::any_of(ds.begin(), ds.end(),
                     [&](const Diagnostic& d) { return d.kind == kind && d.path == path; });
}

AnalysisReport sample_report() {
  AnalysisReport r;
  r.model_echo = {{"kind", "markov"}, {"parameters", {{"lambda", 0.01}, {"mu", 0.1}}}};
  r.time_unit = "hours";
  r.seed_used = 18446744073709551615ULL;
  r.add("availability", 0.1 / 0.11, Method::analytic);
  r.add("mttf", 100.0, Method::paper_rate_sum);
  r.add("reliability", 0.9048374180359595, Method::monte_carlo,
        Uncertainty{9.27e-4, 0.903020, 0.906654, 100000});
  r.add("tiny", 1.2345678901234567e-300, Method::mle);
  r.add("beta", 2.0000000000000004, Method::rank_regression);
  r.series.push_back({"availability", Method::analytic, {{0, 1}, {5, 0.96}, {10, 0.939}}});
  r.notes = {"first, with a comma", "second"};
  return r;
}

}  // namespace

TEST_CASE("two-state document", "[model_io]") {
  const ModelDocument doc = parse_model(R"({"kind": "markov", "parameters": {"lambda": 0.01, "mu": 0.1}})");
  CHECK(doc.kind == ModelKind::markov);
  CHECK(doc.time_unit == "unspecified");
  const auto& m = std::get<MarkovParams>(doc.model);
  CHECK(m.lambda == 0.01);
  CHECK(m.mu == 0.1);
  CHECK(m.chain.rate(0, 1) == 0.01);
  CHECK(m.chain.rate(1, 0) == 0.1);
  CHECK(doc.echo["parameters"]["lambda"] == 0.01);
}

TEST_CASE("fixture documents parse", "[model_io]") {
  for (const char* name : {"two_state.json", "msdr_symmetric.json", "msdr_attacked.json",
                           "series_chain.json", "routofn.json", "routofn_fixed.json",
                           "weibull_model.json", "weibull_data.json"}) {
    INFO(name);
    CHECK_NOTHROW(parse_model_file(kData / "models" / name));
  }
  const ModelDocument ts = parse_model_file(kData / "models" / "two_state.json");
  CHECK(ts.time_unit == "hours");
  CHECK(ts.analyses.seed == 42u);
  CHECK(ts.analyses.times == std::vector<double>{10});
  REQUIRE(ts.analyses.grid);
  CHECK(ts.analyses.grid->values().size() == 11);
  CHECK(ts.analyses.grid->values().back() == 100.0);

  const ModelDocument series = parse_model_file(kData / "models" / "series_chain.json");
  const auto& chain = std::get<MarkovParams>(series.model);
  CHECK(chain.initial == 0);
  CHECK_FALSE(chain.lambda);
  CHECK(chain.chain.rate(1, 2) == 0.25);

  const ModelDocument attacked = parse_model_file(kData / "models" / "msdr_attacked.json");
  const auto& threats = std::get<MsDrParams>(attacked.model).threats;
  REQUIRE(threats.size() == 2);
  CHECK(threats[1].effective_rate() == 0.001);
}

TEST_CASE("missing mu_dr is named", "[model_io]") {
  const auto ds = diagnostics_of(
      R"({"kind": "msdr", "parameters": {"lambda_ms": 0.01, "lambda_dr": 0.01, "mu_ms": 0.1}})");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].kind == Diagnostic::Kind::schema);
  CHECK(ds[0].path == "/parameters/mu_dr");
  CHECK_THAT(ds[0].message, ContainsSubstring("mu_dr"));
}

TEST_CASE("negative lambda_ms cites positivity", "[model_io]") {
  const auto ds = diagnostics_of(
      R"({"kind": "msdr", "parameters": {"lambda_ms": -1, "lambda_dr": 0.01, "mu_ms": 0.1, "mu_dr": 0.1}})");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].kind == Diagnostic::Kind::semantic);
  CHECK(ds[0].path == "/parameters/lambda_ms");
  CHECK_THAT(ds[0].message, ContainsSubstring("> 0"));
}

TEST_CASE("every violation is listed", "[model_io]") {
  const auto ds = diagnostics_of(R"({
    "kind": "msdr", "bogus": 1,
    "parameters": {"lambda_ms": -1, "mu_ms": "x"},
    "analyses": {"n_trials": 0}
  })");
  CHECK(has(ds, Diagnostic::Kind::schema, "/bogus"));
  CHECK(has(ds, Diagnostic::Kind::semantic, "/parameters/lambda_ms"));
  CHECK(has(ds, Diagnostic::Kind::schema, "/parameters/lambda_dr"));
  CHECK(has(ds, Diagnostic::Kind::schema, "/parameters/mu_ms"));
  CHECK(has(ds, Diagnostic::Kind::schema, "/parameters/mu_dr"));
  CHECK(has(ds, Diagnostic::Kind::semantic, "/analyses/n_trials"));
}

TEST_CASE("syntax errors carry a position", "[model_io]") {
  const auto ds = diagnostics_of("{\"kind\": \n  \"markov\",, }");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].kind == Diagnostic::Kind::syntax);
  CHECK_THAT(ds[0].message, ContainsSubstring("line 2"));
}

TEST_CASE("unreadable file", "[model_io]") {
  try {
    parse_model_file(kData / "does_not_exist.json");
    FAIL("expected an error");
  } catch (const ModelError& e) {
    REQUIRE(e.diagnostics().size() == 1);
    CHECK(e.diagnostics()[0].kind == Diagnostic::Kind::io);
    CHECK(e.category() == ErrorCategory::validation);
  }
}

TEST_CASE("malformed corpus yields path-annotated diagnostics", "[model_io][corpus]") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kData / "malformed")) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    INFO(entry.path().filename().string());
    try {
      parse_model_file(entry.path());
      FAIL("document was accepted");
    } catch (const ModelError& e) {
      REQUIRE_FALSE(e.diagnostics().empty());
      for (const Diagnostic& d : e.diagnostics()) {
        CHECK(d.path.starts_with("/"));
        CHECK_FALSE(d.message.empty());
      }
    }
  }
  CHECK(count >= 30);
}

TEST_CASE("fuzzed documents never escape as other errors", "[model_io][fuzz]") {
  const std::string seed_doc = R"({"kind": "msdr", "time_unit": "h", "parameters": {"lambda_ms": 0.01,
    "lambda_dr": 0.02, "mu_ms": 0.1, "mu_dr": 0.3, "threats": [{"attack_rate": 0.01, "applies_to": "ms"}]},
    "analyses": {"horizon": 10, "n_trials": 100, "seed": 1, "t": [1, 2], "grid": "0:1:3"}})";
  const std::string alphabet = "{}[]\":,-0123456789.eE truefalsnl\\";
  std::mt19937_64 gen(99);
  int accepted = 0, rejected = 0;
  for (int k = 0; k < 3000; ++k) {
    std::string doc = seed_doc;
    const int edits = 1 + static_cast<int>(gen() % 4);
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = gen() % doc.size();
      switch (gen() % 3) {
        case 0: doc[pos] = alphabet[gen() % alphabet.size()]; break;
        case 1: doc.erase(pos, 1 + gen() % 5); break;
        default: doc.insert(pos, 1, alphabet[gen() % alphabet.size()]); break;
      }
      if (doc.empty()) doc = "{";
    }
    try {
      parse_model(doc);
      ++accepted;
    } catch (const ModelError& e) {
      ++rejected;
      REQUIRE_FALSE(e.diagnostics().empty());
    }
  }
  CHECK(rejected > 0);
  CHECK(accepted + rejected == 3000);
}

TEST_CASE("structured fuzz over parameter values", "[model_io][fuzz]") {
  const std::vector<nlohmann::json> values{-1, 0, 1e-300, 0.5, 1, 2, 1e300, "x", nullptr,
                                           true, nlohmann::json::array(), nlohmann::json::object()};
  std::mt19937_64 gen(7);
  for (int k = 0; k < 2000; ++k) {
    nlohmann::json doc = {{"kind", "r_out_of_n"},
                          {"parameters", {{"r", values[gen() % values.size()]},
                                          {"subsystems", nlohmann::json::array()}}}};
    const int n = static_cast<int>(gen() % 4);
    for (int i = 0; i < n; ++i) {
      nlohmann::json s = {{"label", "s" + std::to_string(i)}};
      if (gen() % 2) s["availability"] = values[gen() % values.size()];
      else {
        s["lambda"] = values[gen() % values.size()];
        s["mu"] = values[gen() % values.size()];
      }
      doc["parameters"]["subsystems"].push_back(s);
    }
    try {
      const ModelDocument parsed = parse_model(doc.dump());
      const auto& sys = std::get<RoutOfNParams>(parsed.model).system;
      CHECK(sys.r() >= 1);
      CHECK(sys.r() <= sys.n());
    } catch (const ModelError& e) {
      REQUIRE_FALSE(e.diagnostics().empty());
    }
  }
}

TEST_CASE("time grids", "[model_io]") {
  const auto g = parse_grid("0:10:6");
  REQUIRE(g);
  CHECK(g->values() == std::vector<double>{0, 2, 4, 6, 8, 10});
  CHECK(parse_grid("5:5:1")->values() == std::vector<double>{5});
  CHECK_FALSE(parse_grid("1:0:3"));
  CHECK_FALSE(parse_grid("0:1:0"));
  CHECK_FALSE(parse_grid("-1:1:3"));
  CHECK_FALSE(parse_grid("0:1"));
  CHECK_FALSE(parse_grid("a:b:c"));
  CHECK_FALSE(parse_grid("0:1:2.5"));
}

TEST_CASE("json report round-trip", "[model_io][report]") {
  const AnalysisReport r = sample_report();
  const std::string text = emit_report(r, ReportFormat::json);
  const AnalysisReport back = report_from_json(nlohmann::json::parse(text));
  CHECK(back == r);
  CHECK(emit_report(back, ReportFormat::json) == text);
}

TEST_CASE("json keeps at least 15 significant digits", "[model_io][report]") {
  AnalysisReport r;
  r.add("x", 0.12345678901234567, Method::analytic);
  const nlohmann::json j = nlohmann::json::parse(emit_report(r, ReportFormat::json));
  CHECK(j["results"][0]["value"].get<double>() == 0.12345678901234567);
  CHECK_THAT(j.dump(), ContainsSubstring("0.123456789012345"));
}

TEST_CASE("round-trip rejects unknown method labels", "[model_io][report]") {
  nlohmann::json j = report_to_json(sample_report());
  j["results"][0]["method"] = "guesswork";
  CHECK_THROWS_AS(report_from_json(j), ModelError);
}

TEST_CASE("csv layout", "[model_io][report]") {
  AnalysisReport one;
  one.add("availability", 0.1 / 0.11, Method::analytic);
  CHECK(emit_report(one, ReportFormat::csv) ==
        "metric,value,method,std_error\navailability,0.909091,analytic,\n");

  const std::string csv = emit_report(sample_report(), ReportFormat::csv);
  std::istringstream in(csv);
  std::string line;
  int after_header = -1;
  while (std::getline(in, line)) {
    if (line == "t,value") {
      after_header = 0;
    } else if (after_header >= 0 && !line.empty()) {
      ++after_header;
    }
  }
  CHECK(after_header == 3);
  CHECK_THAT(csv, ContainsSubstring("reliability,0.904837,monte_carlo,0.000927\n"));
  CHECK_THAT(csv, ContainsSubstring("# series availability (analytic)\nt,value\n0,1\n5,0.96\n10,0.939\n"));
}

TEST_CASE("csv quotes awkward metric names", "[model_io][report]") {
  AnalysisReport r;
  r.add("pi[a,b]", 0.5, Method::analytic);
  CHECK_THAT(emit_report(r, ReportFormat::csv), ContainsSubstring("\"pi[a,b]\",0.5,analytic,"));
}

TEST_CASE("table is fixed-width", "[model_io][report]") {
  const std::string table = emit_report(sample_report(), ReportFormat::table);
  CHECK_THAT(table, ContainsSubstring("availability  0.9090909091"));
  CHECK_THAT(table, ContainsSubstring("note: second"));
  CHECK_THAT(table, ContainsSubstring("seed: 18446744073709551615"));
}
