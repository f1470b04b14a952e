#include "securakit/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "securakit/markov.hpp"
#include "securakit/model_io.hpp"
#include "securakit/montecarlo.hpp"
#include "securakit/securability.hpp"
#include "securakit/weibull.hpp"

namespace securakit {

namespace {

constexpr std::uint64_t kDefaultTrials = 10'000;

struct Options {
  std::string format = "table";
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool quiet = false;

  std::string file;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::vector<double> times;
  std::string grid;
  std::string method;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::uint64_t> trials;
  std::optional<double> threshold;
  std::string trials_csv;
};

[[noreturn]] void fail_at(const std::string& path, const std::string& message) {
  throw ModelError({{Diagnostic::Kind::schema, path, message}});
}

std::string metric_at(const std::string& name, const std::string& label) {
  return name + "[" + label + "]";
}

class Session {
 public:
  Session(const Options& opts, std::ostream& err) : opts_(opts), err_(err) {}

  void warn(const std::string& message) const {
    if (!opts_.quiet) err_ << "securakit: warning: " << message << '\n';
  }

  ModelDocument load() const {
    if (opts_.file.empty()) fail_at("/", "no model file given (use --file)");
    return parse_model_file(opts_.file);
  }

  AnalysisReport start_report(const ModelDocument& doc) const {
    AnalysisReport report;
    report.model_echo = doc.echo;
    report.time_unit = doc.time_unit;
    return report;
  }

  std::vector<double> times(const ModelDocument* doc) const {
    if (!opts_.times.empty()) return opts_.times;
    if (doc) return doc->analyses.times;
    return {};
  }

  std::optional<TimeGrid> grid(const ModelDocument* doc) const {
    if (!opts_.grid.empty()) {
      auto g = parse_grid(opts_.grid);
      if (!g) throw CLI::ValidationError("--grid", "expected t0:t1:points");
      return g;
    }
    if (doc) return doc->analyses.grid;
    return std::nullopt;
  }

  std::uint64_t seed(const ModelDocument& doc) const {
    if (opts_.seed) return *opts_.seed;
    if (doc.analyses.seed) return *doc.analyses.seed;
    fail_at("/analyses/seed", "randomized analyses require a seed (document or --seed)");
  }

  MonteCarloConfig mc_config(const ModelDocument& doc, bool need_horizon) const {
    MonteCarloConfig cfg;
    cfg.seed = seed(doc);
    cfg.n_trials = opts_.trials.value_or(doc.analyses.n_trials.value_or(kDefaultTrials));
    if (opts_.horizon) cfg.horizon = *opts_.horizon;
    else if (doc.analyses.horizon) cfg.horizon = *doc.analyses.horizon;
    else if (need_horizon) fail_at("/analyses/horizon", "missing required key 'horizon'");
    if (doc.analyses.max_events) cfg.max_events = *doc.analyses.max_events;
    cfg.threads = threads();
    return cfg;
  }

  unsigned threads() const {
    if (opts_.threads) return *opts_.threads;
    if (const char* env = std::getenv("SECURAKIT_THREADS")) {
      try {
        const unsigned long v = std::stoul(env);
        return static_cast<unsigned>(v);
      } catch (const std::exception&) {
        throw CLI::ValidationError("SECURAKIT_THREADS", "expected a nonnegative integer");
      }
    }
    return 0;
  }

  void write_trials(const std::vector<double>& values) const {
    if (opts_.trials_csv.empty()) return;
    std::ofstream f(opts_.trials_csv, std::ios::binary);
    if (!f) {
      throw ModelError({{Diagnostic::Kind::io, "/", "cannot write '" + opts_.trials_csv + "'"}});
    }
    write_trials_csv(f, values);
  }

  const Options& opts() const { return opts_; }

 private:
  const Options& opts_;
  std::ostream& err_;
};

/// Chain and start state for markov and msdr documents.
struct ChainView {
  Ctmcd chain;
  Index start;
};

ChainView chain_of(const ModelDocument& doc) {
  if (const auto* m = std::get_if<MarkovParams>(&doc.model)) return {m->chain, m->initial};
  if (const auto* m = std::get_if<MsDrParams>(&doc.model)) {
    return {build_msdr(apply_threats(m->rates, m->threats), m->policy), msdr::kBothUp};
  }
  fail_at("/kind", "this command needs a markov or msdr model, got '" + to_string(doc.kind) + "'");
}

/// The rate-sum MTTF is undefined when an operational state has no direct
/// failure exit; that case becomes a note instead of an error.
void add_rate_sum_mttf(AnalysisReport& report, const Ctmcd& chain) {
  try {
    report.add("mttf", mttf_rate_sum(chain), Method::paper_rate_sum);
  } catch (const UnreachableError& e) {
    report.notes.push_back(std::string("mttf (paper_rate_sum) undefined: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// weibull

AnalysisReport cmd_weibull_eval(const Session& s) {
  const Options& o = s.opts();
  std::optional<ModelDocument> doc;
  std::optional<WeibullModeld> model;
  AnalysisReport report;
  if (!o.file.empty()) {
    doc = s.load();
    const auto* w = std::get_if<WeibullParams>(&doc->model);
    if (!w) fail_at("/kind", "weibull eval needs a weibull model");
    if (!w->model) fail_at("/parameters/alpha", "weibull eval needs 'alpha' and 'beta'");
    model = w->model;
    report = s.start_report(*doc);
  } else {
    if (!o.alpha || !o.beta) throw CLI::RequiredError("--alpha and --beta (or --file)");
    model.emplace(*o.alpha, *o.beta);
    report.model_echo = {{"kind", "weibull"}, {"parameters", {{"alpha", *o.alpha}, {"beta", *o.beta}}}};
    report.time_unit = "unspecified";
  }
  const ModelDocument* d = doc ? &*doc : nullptr;
  const std::vector<double> ts = s.times(d);
  report.add("mean_life", mean_life(*model), Method::analytic);
  if (ts.size() == 1) {
    const double t = ts.front();
    report.add("pdf", pdf(t, *model), Method::analytic);
    report.add("cdf", cdf(t, *model), Method::analytic);
    report.add("hazard", hazard(t, *model), Method::analytic);
    report.add("reliability", reliability(t, *model), Method::analytic);
  }
  std::vector<double> curve_times = ts.size() > 1 ? ts : std::vector<double>{};
  if (auto g = s.grid(d)) curve_times = g->values();
  if (!curve_times.empty()) {
    Series f{"pdf", Method::analytic, {}}, F{"cdf", Method::analytic, {}},
        h{"hazard", Method::analytic, {}}, r{"reliability", Method::analytic, {}};
    for (double t : curve_times) {
      f.points.emplace_back(t, pdf(t, *model));
      F.points.emplace_back(t, cdf(t, *model));
      h.points.emplace_back(t, hazard(t, *model));
      r.points.emplace_back(t, reliability(t, *model));
    }
    report.series = {f, F, h, r};
  }
  return report;
}

AnalysisReport cmd_weibull_fit(const Session& s) {
  const ModelDocument doc = s.load();
  const auto* w = std::get_if<WeibullParams>(&doc.model);
  if (!w) fail_at("/kind", "weibull fit needs a weibull model");
  if (!w->data) fail_at("/parameters/data", "weibull fit needs failure data");
  std::string method = s.opts().method;
  if (method.empty()) method = doc.analyses.method.value_or("both");

  AnalysisReport report = s.start_report(doc);
  const auto run = [&](FitMethod m) {
    const FitResult fit_result = fit(*w->data, m);
    const Method label = m == FitMethod::mle ? Method::mle : Method::rank_regression;
    report.add("alpha", fit_result.model.alpha(), label);
    report.add("beta", fit_result.model.beta(), label);
    report.add("mean_life", mean_life(fit_result.model), label);
    if (m == FitMethod::rank_regression) report.add("r_squared", fit_result.r_squared, label);
    if (m == FitMethod::mle) report.add("score", fit_result.score, label);
    for (const auto& warning : fit_result.warnings) {
      s.warn(warning);
      report.notes.push_back(warning);
    }
  };
  if (method == "rank_regression" || method == "both") run(FitMethod::rank_regression);
  if (method == "mle" || method == "both") run(FitMethod::mle);
  return report;
}

// ---------------------------------------------------------------------------
// markov

AnalysisReport cmd_markov_solve(const Session& s) {
  const ModelDocument doc = s.load();
  const ChainView view = chain_of(doc);
  AnalysisReport report = s.start_report(doc);
  const ProbabilityVector<double> pi = steady_state(view.chain);
  for (Index i = 0; i < view.chain.size(); ++i) {
    report.add(metric_at("pi", view.chain.space()[i].label), pi[i], Method::analytic);
  }
  report.add("availability", operational_mass(view.chain.space(), pi), Method::analytic);
  report.add("residual", (pi.values() * view.chain.generator()).cwiseAbs().maxCoeff(),
             Method::analytic);
  if (const auto* m = std::get_if<MarkovParams>(&doc.model); m && m->lambda && m->mu) {
    report.add("availability_two_state", availability_two_state(*m->lambda, *m->mu),
               Method::analytic);
  }
  const std::optional<double> dt = s.opts().dt ? s.opts().dt : doc.analyses.dt;
  if (dt) {
    const TransitionMatrix<double> p = discretize(view.chain, *dt);
    report.add("discrete_residual", (pi.values() * p.probs - pi.values()).cwiseAbs().maxCoeff(),
               Method::analytic);
  }
  return report;
}

AnalysisReport cmd_markov_transient(const Session& s) {
  const ModelDocument doc = s.load();
  const ChainView view = chain_of(doc);
  AnalysisReport report = s.start_report(doc);
  const auto pi0 = ProbabilityVector<double>::point_mass(view.chain.size(), view.start);
  const bool has_failures = view.chain.space().has_failure_states();
  const std::vector<double> ts = s.times(&doc);
  const std::optional<TimeGrid> grid = s.grid(&doc);
  if (ts.empty() && !grid) fail_at("/analyses/t", "markov transient needs 't' or a grid");

  if (ts.size() == 1) {
    const double t = ts.front();
    const ProbabilityVector<double> pt = transient(view.chain, pi0, t);
    for (Index i = 0; i < view.chain.size(); ++i) {
      report.add(metric_at("pi_t", view.chain.space()[i].label), pt[i], Method::analytic);
    }
    report.add("availability_at", operational_mass(view.chain.space(), pt), Method::analytic);
    if (has_failures) report.add("reliability_at", reliability_at(view.chain, pi0, t), Method::analytic);
  }
  std::vector<double> curve = ts.size() > 1 ? ts : std::vector<double>{};
  if (grid) curve = grid->values();
  if (!curve.empty()) {
    Series a{"availability", Method::analytic, {}};
    Series r{"reliability", Method::analytic, {}};
    for (double t : curve) {
      a.points.emplace_back(t, availability_at(view.chain, pi0, t));
      if (has_failures) r.points.emplace_back(t, reliability_at(view.chain, pi0, t));
    }
    report.series.push_back(std::move(a));
    if (has_failures) report.series.push_back(std::move(r));
  }
  return report;
}

AnalysisReport cmd_markov_metrics(const Session& s) {
  const ModelDocument doc = s.load();
  const ChainView view = chain_of(doc);
  AnalysisReport report = s.start_report(doc);
  const MetricsBundle bundle = analytic_metrics(view.chain, view.start);
  report.add("mttf", bundle.mttf, bundle.method);
  add_rate_sum_mttf(report, view.chain);
  report.add("mttr", bundle.mttr, bundle.method);
  report.add("availability", bundle.availability, bundle.method);
  for (Index i = 0; i < view.chain.size(); ++i) {
    if (!view.chain.space().operational(i)) {
      report.add(metric_at("mttr", view.chain.space()[i].label), mttr(view.chain, i),
                 Method::analytic);
    }
  }
  report.notes.push_back("mttf (analytic) is the expected time to absorption from '" +
                         view.chain.space()[view.start].label + "'");
  report.notes.push_back("mttr (analytic) is the steady-state mean down time");
  return report;
}

// ---------------------------------------------------------------------------
// mc

Uncertainty uncertainty_of(const Estimate& e) {
  return {e.std_error, e.ci_low, e.ci_high, e.n_effective};
}

AnalysisReport cmd_mc_reliability(const Session& s) {
  const ModelDocument doc = s.load();
  AnalysisReport report = s.start_report(doc);
  MonteCarloConfig cfg = s.mc_config(doc, true);
  report.seed_used = cfg.seed;
  std::vector<double> trials;

  if (const auto* sys = std::get_if<RoutOfNParams>(&doc.model)) {
    const double default_threshold =
        static_cast<double>(sys->system.r()) / static_cast<double>(sys->system.n());
    cfg.threshold = s.opts().threshold.value_or(doc.analyses.threshold.value_or(default_threshold));
    const Estimate e = estimate_threshold_reliability(sys->system, cfg, &trials);
    report.add("reliability", e.value, Method::monte_carlo, uncertainty_of(e));
    report.notes.push_back("trial fails when the operational fraction drops below " +
                           std::to_string(cfg.threshold));
  } else {
    const ChainView view = chain_of(doc);
    const Estimate e = estimate_reliability(view.chain, view.start, cfg, &trials);
    report.add("reliability", e.value, Method::monte_carlo, uncertainty_of(e));
    if (auto g = s.grid(&doc)) {
      const std::vector<double> ts = g->values();
      const std::vector<Estimate> curve = estimate_reliability_curve(view.chain, view.start, cfg, ts);
      Series series{"reliability", Method::monte_carlo, {}};
      for (std::size_t i = 0; i < ts.size(); ++i) series.points.emplace_back(ts[i], curve[i].value);
      report.series.push_back(std::move(series));
    }
  }
  report.add("n_trials", static_cast<double>(cfg.n_trials), Method::monte_carlo);
  s.write_trials(trials);
  return report;
}

AnalysisReport cmd_mc_mttf(const Session& s) {
  const ModelDocument doc = s.load();
  AnalysisReport report = s.start_report(doc);
  const ChainView view = chain_of(doc);
  const MonteCarloConfig cfg = s.mc_config(doc, false);
  report.seed_used = cfg.seed;
  std::vector<double> trials;
  const Estimate e = estimate_mttf(view.chain, view.start, cfg, &trials);
  report.add("mttf", e.value, Method::monte_carlo, uncertainty_of(e));
  report.add("n_trials", static_cast<double>(cfg.n_trials), Method::monte_carlo);
  s.write_trials(trials);
  return report;
}

// ---------------------------------------------------------------------------
// sec

AnalysisReport cmd_sec_msdr(const Session& s) {
  const ModelDocument doc = s.load();
  const auto* m = std::get_if<MsDrParams>(&doc.model);
  if (!m) fail_at("/kind", "sec msdr needs an msdr model");
  AnalysisReport report = s.start_report(doc);
  const MsDrRates effective = apply_threats(m->rates, m->threats);
  const Ctmcd chain = build_msdr(effective, m->policy);
  const ProbabilityVector<double> pi = steady_state(chain);

  report.add("service_availability", 1.0 - pi[msdr::kBothDown], Method::analytic);
  for (Index i = 0; i < chain.size(); ++i) {
    report.add(metric_at("pi", chain.space()[i].label), pi[i], Method::analytic);
  }
  report.add("mttf", mttf_absorbing(chain, msdr::kBothUp), Method::analytic);
  add_rate_sum_mttf(report, chain);
  report.add("mttr", mttr(chain, msdr::kBothDown), Method::analytic);
  report.add("ms_availability", availability_two_state(effective.lambda_ms, effective.mu_ms),
             Method::analytic);
  if (!m->threats.empty()) {
    report.add("service_availability_baseline", service_availability(m->rates, m->policy),
               Method::analytic);
    for (std::size_t i = 0; i < m->threats.size(); ++i) {
      if (m->threats[i].effective_rate() > 0) {
        report.add("mtta[" + std::to_string(i) + ":" + m->threats[i].applies_to + "]",
                   mtta(m->threats[i]), Method::analytic);
      }
    }
  }
  report.notes.push_back(
      "states: S0 both up, S1 MS down, S2 DR down, S3 both down; service is up unless in S3");
  report.notes.push_back(
      "canonical independent-component topology: MS and DR fail and repair independently; "
      "repair policy: " + to_string(m->policy));
  if (!m->threats.empty()) {
    report.notes.push_back("attack rates are added to the failure rate of the targeted component");
  }
  return report;
}

AnalysisReport cmd_sec_routofn(const Session& s) {
  const ModelDocument doc = s.load();
  const auto* p = std::get_if<RoutOfNParams>(&doc.model);
  if (!p) fail_at("/kind", "sec routofn needs an r_out_of_n model");
  AnalysisReport report = decompose(p->system);
  report.model_echo = doc.echo;
  report.time_unit = doc.time_unit;
  return report;
}

void print_diagnostics(std::ostream& err, const ModelError& e) {
  for (const Diagnostic& d : e.diagnostics()) {
    err << "securakit: error: kind=" << to_string(d.kind) << " path=" << d.path << ": "
        << d.message << '\n';
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Reliability and securability analysis toolkit", "securakit"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "table"}))
      ->capture_default_str();
  app.add_option("--out", o.out_path, "Write the report to this path instead of stdout");
  app.add_option("--seed", o.seed, "Seed for randomized analyses (overrides the document)");
  app.add_option("--threads", o.threads, "Monte Carlo worker threads (0 = all cores)");
  app.add_flag("--quiet", o.quiet, "Suppress warnings");

  const auto add_file = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--file,-f", o.file, "Model document (JSON)");
    if (required) opt->required();
    return opt;
  };
  const auto add_grid = [&](CLI::App* cmd) {
    return cmd->add_option("--grid", o.grid, "Series grid t0:t1:points");
  };

  auto* weibull = app.add_subcommand("weibull", "Weibull failure analysis");
  weibull->require_subcommand(1, 1);
  auto* w_eval = weibull->add_subcommand("eval", "Evaluate pdf, cdf, hazard, reliability, mean life");
  auto* w_file = add_file(w_eval, false);
  w_eval->add_option("--alpha", o.alpha, "Scale parameter")->excludes(w_file);
  w_eval->add_option("--beta", o.beta, "Shape parameter")->excludes(w_file);
  auto* w_t = w_eval->add_option("--t", o.times, "Evaluation time(s)");
  add_grid(w_eval);
  (void)w_t;
  auto* w_fit = weibull->add_subcommand("fit", "Estimate alpha and beta from failure data");
  add_file(w_fit, true);
  w_fit->add_option("--method", o.method, "rank_regression, mle or both")
      ->check(CLI::IsMember({"rank_regression", "mle", "both"}));

  auto* markov = app.add_subcommand("markov", "Markov chain analysis");
  markov->require_subcommand(1, 1);
  auto* m_solve = markov->add_subcommand("solve", "Steady-state probabilities and availability");
  add_file(m_solve, true);
  m_solve->add_option("--dt", o.dt, "Also check the discretised chain at this step");
  auto* m_transient = markov->add_subcommand("transient", "Transient availability and reliability");
  add_file(m_transient, true);
  m_transient->add_option("--t", o.times, "Evaluation time(s)");
  add_grid(m_transient);
  auto* m_metrics = markov->add_subcommand("metrics", "MTTF, MTTR and availability");
  add_file(m_metrics, true);

  auto* mc = app.add_subcommand("mc", "Monte Carlo simulation");
  mc->require_subcommand(1, 1);
  auto* mc_rel = mc->add_subcommand("reliability", "Estimate reliability at the horizon");
  add_file(mc_rel, true);
  add_grid(mc_rel);
  auto* mc_mttf = mc->add_subcommand("mttf", "Estimate mean time to failure");
  add_file(mc_mttf, true);
  for (auto* cmd : {mc_rel, mc_mttf}) {
    cmd->add_option("--trials", o.trials, "Number of trials")->check(CLI::PositiveNumber);
    cmd->add_option("--trials-csv", o.trials_csv, "Write per-trial values as CSV");
  }
  mc_rel->add_option("--horizon", o.horizon, "Mission time")->check(CLI::NonNegativeNumber);
  mc_rel->add_option("--threshold", o.threshold, "Minimum operational fraction (r_out_of_n)")
      ->check(CLI::Range(0.0, 1.0));

  auto* sec = app.add_subcommand("sec", "Securability models");
  sec->require_subcommand(1, 1);
  auto* sec_msdr = sec->add_subcommand("msdr", "Main system / disaster recovery chain");
  add_file(sec_msdr, true);
  auto* sec_rn = sec->add_subcommand("routofn", "r-out-of-n:G composition");
  add_file(sec_rn, true);

  auto* validate = app.add_subcommand("validate", "Validate a model document without analysing it");
  validate->add_option("file", o.file, "Model document")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "securakit: error: kind=usage: " << e.what() << '\n';
    return kExitUsage;
  }

  const Session session(o, err);
  try {
    AnalysisReport report;
    if (validate->parsed()) {
      const ModelDocument doc = parse_model_file(o.file);
      if (!o.quiet) out << "ok: " << o.file << " (kind " << to_string(doc.kind) << ")\n";
      return kExitOk;
    } else if (w_eval->parsed()) {
      report = cmd_weibull_eval(session);
    } else if (w_fit->parsed()) {
      report = cmd_weibull_fit(session);
    } else if (m_solve->parsed()) {
      report = cmd_markov_solve(session);
    } else if (m_transient->parsed()) {
      report = cmd_markov_transient(session);
    } else if (m_metrics->parsed()) {
      report = cmd_markov_metrics(session);
    } else if (mc_rel->parsed()) {
      report = cmd_mc_reliability(session);
    } else if (mc_mttf->parsed()) {
      report = cmd_mc_mttf(session);
    } else if (sec_msdr->parsed()) {
      report = cmd_sec_msdr(session);
    } else if (sec_rn->parsed()) {
      report = cmd_sec_routofn(session);
    }

    const std::string text = emit_report(report, *format_from_string(o.format));
    if (o.out_path.empty()) {
      out << text;
    } else {
      std::ofstream f(o.out_path, std::ios::binary);
      if (!f || !(f << text)) {
        throw ModelError({{Diagnostic::Kind::io, "/", "cannot write '" + o.out_path + "'"}});
      }
    }
    return kExitOk;
  } catch (const ModelError& e) {
    print_diagnostics(err, e);
    return kExitValidation;
  } catch (const CLI::Error& e) {
    err << "securakit: error: kind=usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    const bool validation = e.category() == ErrorCategory::validation;
    err << "securakit: error: kind=" << (validation ? "validation" : "numerical") << ": "
        << e.what() << '\n';
    return validation ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    err << "securakit: error: kind=numerical: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace securakit
