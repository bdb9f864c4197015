#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "crawlrate/allocator.hpp"
#include "crawlrate/error.hpp"
#include "crawlrate/harness.hpp"
#include "crawlrate/point_process.hpp"
#include "crawlrate/rng.hpp"

namespace crawlrate::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool force = false;
  std::string format = "csv";
  int verbosity = 0;
};

struct TraceOptions {
  std::string trace;
  std::string trace_format = "timestamps-v1";
  std::string time_unit = "s";
};

json metadata(std::uint64_t seed) { return {{"seed", seed}, {"rng", std::string(kRngAlgorithm)}}; }

// Creates the output directory; refuses to write into a non-empty one without --force.
fs::path prepare_output(const CommonOptions& opts, const std::string& fallback) {
  fs::path dir = opts.out_dir.empty() ? fs::path(fallback) : fs::path(opts.out_dir);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir) && !opts.force) {
      throw UsageError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
    }
  } else {
    fs::create_directories(dir);
  }
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string curve_csv(const Eigen::VectorXd& values) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10);
  s << "k,value\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) s << (i + 1) << ',' << values(i) << '\n';
  return s.str();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string safe_name(std::string label) {
  for (char& c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return label;
}

double time_unit_seconds(const std::string& unit) {
  if (unit == "s") return 1.0;
  if (unit == "min") return 60.0;
  if (unit == "h") return 3600.0;
  if (unit == "d") return 86400.0;
  throw UsageError("unknown time unit '" + unit + "' (expected s, min, h or d)");
}

ChangeTrace rescale(const ChangeTrace& trace, double unit) {
  std::vector<double> events(trace.events().begin(), trace.events().end());
  for (double& t : events) t /= unit;
  return ChangeTrace(std::move(events), trace.horizon() / unit);
}

IngestResult load_trace(const TraceOptions& t, std::ostream& err) {
  if (t.trace.empty()) throw UsageError("--trace is required");
  if (!fs::exists(t.trace)) throw UsageError("trace file " + t.trace + " does not exist");
  IngestResult r;
  try {
    r = ingest_trace(t.trace, parse_trace_format(t.trace_format));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  r.trace = rescale(r.trace, time_unit_seconds(t.time_unit));
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  return r;
}

json summary_json(const ExperimentReport& report) {
  json ests = json::array();
  for (const auto& s : report.estimators) {
    json e{{"label", s.label},
           {"kind", s.kind},
           {"terminal_mean", s.terminal_mean},
           {"terminal_rmse", s.terminal_rmse},
           {"terminal_ci95_halfwidth", s.terminal_ci_halfwidth},
           {"resolve_every", s.resolve_every}};
    if (s.slope) {
      e["rate_slope"] = {{"slope", s.slope->slope},
                         {"intercept", s.slope->intercept},
                         {"points_used", s.slope->points_used},
                         {"points_dropped", s.slope->points_dropped}};
    }
    if (s.conjectured_rate_exponent) e["conjectured_rate_exponent"] = *s.conjectured_rate_exponent;
    ests.push_back(std::move(e));
  }
  json crossings = json::array();
  for (const auto& c : report.rmse_crossovers) crossings.push_back({{"a", c.a}, {"b", c.b}, {"last_step", c.step}});
  return {{"name", report.name},
          {"delta", report.delta},
          {"rate_p", report.rate_p},
          {"n_steps", report.n_steps},
          {"n_runs", report.n_runs},
          {"slope_window", {report.slope_k_min, report.slope_k_max}},
          {"estimators", ests},
          {"rmse_crossovers", crossings}};
}

// ---- simulate ----

int cmd_simulate(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.config.empty()) throw UsageError("simulate needs --config");
  const json doc = load_json(opts.config);
  const std::string kind = config_kind(doc);

  if (kind == "trace") {
    TraceSpec spec = parse_trace_spec(doc);
    if (opts.seed) spec.seed = *opts.seed;
    const fs::path dir = prepare_output(opts, spec.name);
    const ChangeTrace trace = sample_poisson_process(spec.rate, spec.horizon, spec.seed);
    std::ostringstream body;
    body << "# synthetic Poisson change trace: rate " << spec.rate << ", horizon " << spec.horizon << ", seed "
         << spec.seed << ", rng " << kRngAlgorithm << '\n';
    write_trace(body, trace);
    write_file(dir / "trace.txt", body.str());
    json meta = metadata(spec.seed);
    meta.update({{"rate", spec.rate}, {"horizon", spec.horizon}, {"count", trace.size()}});
    write_json(dir / "trace.json", meta);
    out << "wrote " << trace.size() << " events to " << (dir / "trace.txt").string() << '\n';
    return kSuccess;
  }
  if (kind != "experiment") throw ConfigError("unknown config kind '" + kind + "'");

  ExperimentConfig config = parse_experiment(doc);
  if (opts.seed) config.master_seed = *opts.seed;
  config.jobs = opts.jobs;
  const fs::path dir = prepare_output(opts, config.name);

  const EstimateTensor tensor = run_replications(config);
  const ExperimentReport report = summarize(config, tensor);

  json doc_out = metadata(config.master_seed);
  doc_out.update(summary_json(report));
  json configs = json::array();
  for (const auto& e : config.estimators) configs.push_back(to_json(e));
  doc_out["estimator_configs"] = configs;

  json curves = json::object();
  for (std::size_t e = 0; e < tensor.estimates.size(); ++e) {
    const auto& m = tensor.estimates[e];
    const std::string name = safe_name(tensor.labels[e]);
    const Eigen::VectorXd run0 = m.row(0).transpose();
    const Eigen::VectorXd rmse = rmse_curve(m, tensor.true_delta);
    std::optional<ConfidenceBand> band;
    if (m.rows() >= 2) band = confidence_band(m);
    const Eigen::VectorXd mean = band ? band->mean : run0;
    if (opts.format == "json") {
      json c{{"run0", to_std(run0)}, {"mean", to_std(mean)}, {"rmse", to_std(rmse)}};
      if (band) {
        c["ci_lower"] = to_std(band->lower);
        c["ci_upper"] = to_std(band->upper);
      }
      curves[tensor.labels[e]] = std::move(c);
    } else {
      write_file(dir / "curves" / (name + "_run0.csv"), curve_csv(run0));
      write_file(dir / "curves" / (name + "_mean.csv"), curve_csv(mean));
      write_file(dir / "curves" / (name + "_rmse.csv"), curve_csv(rmse));
      if (band) {
        write_file(dir / "curves" / (name + "_ci_lower.csv"), curve_csv(band->lower));
        write_file(dir / "curves" / (name + "_ci_upper.csv"), curve_csv(band->upper));
      }
    }
  }
  if (opts.format == "json") doc_out["curves"] = std::move(curves);
  write_json(dir / "report.json", doc_out);

  // Wall-clock numbers live apart from the report so that report.json is reproducible bit for bit.
  json timing = json::object();
  for (std::size_t e = 0; e < report.estimators.size(); ++e) {
    timing[report.estimators[e].label] = {{"seconds_per_step", report.estimators[e].seconds_per_step},
                                          {"total_seconds", tensor.seconds[e]}};
  }
  write_json(dir / "timing.json", {{"jobs", config.jobs}, {"estimators", timing}});

  out << std::left << std::setw(14) << "estimator" << std::setw(16) << "terminal_mean" << std::setw(16)
      << "terminal_rmse" << "slope\n";
  for (const auto& s : report.estimators) {
    out << std::setw(14) << s.label << std::setw(16) << s.terminal_mean << std::setw(16) << s.terminal_rmse
        << (s.slope ? std::to_string(s.slope->slope) : "-") << '\n';
  }
  if (opts.verbosity > 0) err << "report written to " << (dir / "report.json").string() << '\n';
  return kSuccess;
}

// ---- estimate ----

std::vector<EstimatorConfig> default_real_data_estimators() {
  // Real traces are short, so the offline solvers re-solve at every step.
  return {EstimatorConfig::naive(), EstimatorConfig::mle(1), EstimatorConfig::lln(),
          EstimatorConfig::sa(StepsizeSchedule::polynomial(0.75)),
          EstimatorConfig::sam(StepsizeSchedule::polynomial(0.6), StepsizeSchedule::polynomial(1.2))};
}

std::vector<EstimatorConfig> select_estimators(const std::vector<EstimatorConfig>& base, const std::string& list) {
  std::vector<EstimatorConfig> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const EstimatorKind kind = parse_estimator_kind(item);
    auto it = std::find_if(base.begin(), base.end(), [&](const EstimatorConfig& c) { return c.kind == kind; });
    if (it != base.end()) {
      out.push_back(*it);
    } else {
      EstimatorConfig c;
      c.kind = kind;
      c.resolve_every = 1;
      out.push_back(c);
    }
  }
  return out;
}

int cmd_estimate(const CommonOptions& opts, const TraceOptions& topts, std::optional<double> rate,
                 const std::string& schedule_file, const std::optional<std::string>& estimator_list,
                 std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = opts.seed.value_or(1);
  std::vector<EstimatorConfig> estimators = default_real_data_estimators();
  if (!opts.config.empty()) {
    const json doc = load_json(opts.config);
    if (!doc.contains("estimators")) throw ConfigError("estimate config needs an 'estimators' array");
    estimators = parse_estimators(doc.at("estimators"));
  }
  if (estimator_list) {
    try {
      estimators = select_estimators(estimators, *estimator_list);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  if (estimators.empty()) {
    err << "warning: empty estimator set, nothing to do\n";
    return kSuccess;
  }

  const IngestResult ingested = load_trace(topts, err);
  const ChangeTrace& trace = ingested.trace;
  if (trace.size() < 2) throw InsufficientData("trace has fewer than 2 events");

  std::optional<AccessSchedule> schedule;
  double rate_p = 0.0;
  if (!schedule_file.empty()) {
    TraceOptions s = topts;
    s.trace = schedule_file;
    const IngestResult accesses = load_trace(s, err);
    std::vector<double> times(accesses.trace.events().begin(), accesses.trace.events().end());
    if (times.empty() || times.front() != 0.0) times.insert(times.begin(), 0.0);
    const double span = times.back();
    rate_p = rate.value_or(span > 0.0 ? static_cast<double>(times.size() - 1) / span : 1.0);
    schedule.emplace(std::move(times), rate_p);
  } else {
    if (!rate) throw UsageError("estimate needs --rate or --schedule");
    rate_p = *rate;
    if (!(rate_p > 0.0)) throw UsageError("--rate must be positive");
    schedule.emplace(sample_access_schedule_over(rate_p, trace.horizon(), seed));
  }
  const IndicatorStream stream = indicators_from_traces(trace, *schedule);
  const fs::path dir = prepare_output(opts, "estimate");

  std::ostringstream lines;
  lines << std::setprecision(std::numeric_limits<double>::max_digits10);
  json summary = metadata(seed);
  summary["trace"] = {{"path", topts.trace}, {"count", trace.size()}, {"horizon", trace.horizon()},
                      {"time_unit", topts.time_unit}, {"duplicates_dropped", ingested.duplicates_dropped}};
  summary["rate_p"] = rate_p;
  summary["steps"] = stream.size();
  summary["changes_detected"] = stream.change_count();
  json est_json = json::array();

  for (const auto& cfg : estimators) {
    RateEstimator est(cfg);
    const std::string label = cfg.display_label();
    std::ostringstream csv;
    csv << std::setprecision(std::numeric_limits<double>::max_digits10) << "k,value\n";
    std::size_t k = 0;
    for (const auto& obs : stream.observations()) {
      est.observe(obs, rate_p);
      ++k;
      const bool offline = !is_online(cfg.kind);
      if (offline && !(k == 1 || k % cfg.resolve_every == 0 || k == stream.size())) continue;
      const double value = est.estimate().value();
      if (opts.format == "csv") {
        csv << k << ',' << value << '\n';
      } else {
        lines << json{{"k", k}, {"estimate", value}, {"estimator", label}, {"seed", seed}}.dump() << '\n';
      }
    }
    if (opts.format == "csv") write_file(dir / (safe_name(label) + ".csv"), csv.str());
    json e = to_json(cfg);
    e["final_estimate"] = est.estimate() ? json(*est.estimate()) : json(nullptr);
    if (const auto& r = est.last_report()) {
      e["solver"] = {{"estimate", r->estimate}, {"status", to_string(r->status)},
                     {"iterations", r->iterations}, {"residual", r->residual}};
    }
    est_json.push_back(std::move(e));
    out << label << ": " << (est.estimate() ? std::to_string(*est.estimate()) : "n/a") << '\n';
  }
  summary["estimators"] = est_json;
  if (opts.format != "csv") write_file(dir / "trajectories.jsonl", lines.str());
  write_json(dir / "summary.json", summary);
  out << stream.size() << " indicator steps, " << stream.change_count() << " changes detected\n";
  return kSuccess;
}

// ---- ingest ----

int cmd_ingest(const CommonOptions& opts, const TraceOptions& topts, std::ostream& out, std::ostream& err) {
  const IngestResult r = load_trace(topts, err);
  json doc{{"path", topts.trace},
           {"format", topts.trace_format},
           {"time_unit", topts.time_unit},
           {"count", r.trace.size()},
           {"raw_count", r.raw_count},
           {"duplicates_dropped", r.duplicates_dropped},
           {"was_unsorted", r.was_unsorted},
           {"iso_input", r.iso_input},
           {"horizon", r.trace.horizon()},
           {"warnings", r.warnings}};
  if (r.trace.size() >= 2) {
    const ChangeRateSummary s = empirical_change_rate(r.trace);
    doc["span"] = s.span;
    doc["change_rate"] = s.rate;
    doc["mean_inter_update_gap"] = s.mean_gap;
  } else {
    doc["span"] = 0.0;
  }
  if (!opts.out_dir.empty()) {
    const fs::path dir = prepare_output(opts, opts.out_dir);
    std::ostringstream body;
    write_trace(body, r.trace);
    write_file(dir / "trace.txt", body.str());
    write_json(dir / "ingest.json", doc);
  }
  out << doc.dump(2) << '\n';
  return kSuccess;
}

// ---- qq ----

int cmd_qq(const CommonOptions& opts, const TraceOptions& topts, std::optional<double> rate, std::ostream& out,
           std::ostream& err) {
  const IngestResult r = load_trace(topts, err);
  if (r.trace.size() < 2) throw InsufficientData("Q-Q needs at least 2 events");
  const ChangeRateSummary summary = empirical_change_rate(r.trace);
  const double reference = rate.value_or(summary.rate);
  if (!(reference > 0.0)) throw UsageError("--rate must be positive");
  const std::vector<double> gaps = r.trace.gaps();
  const QQData qq = qq_points(gaps, reference);
  const QQFit fit = qq_fit(qq);

  constexpr double kMinCorrelation = 0.99;
  json doc{{"reference_rate", reference},
           {"rate_source", rate ? "override" : "empirical"},
           {"empirical_rate", summary.rate},
           {"mean_inter_update_gap", summary.mean_gap},
           {"n", qq.points.size()},
           {"correlation", fit.correlation},
           {"slope", fit.slope},
           {"intercept", fit.intercept},
           {"exponential_fit_ok", fit.correlation > kMinCorrelation}};
  const fs::path dir = prepare_output(opts, "qq");
  std::ostringstream csv;
  csv << std::setprecision(std::numeric_limits<double>::max_digits10) << "empirical,theoretical\n";
  for (const auto& p : qq.points) csv << p.empirical << ',' << p.theoretical << '\n';
  write_file(dir / "qq.csv", csv.str());
  write_json(dir / "qq.json", doc);
  out << "correlation " << fit.correlation << ", slope " << fit.slope << ", reference rate " << reference << '\n';
  if (fit.correlation <= kMinCorrelation) err << "warning: gaps do not look exponential (correlation <= 0.99)\n";
  return kSuccess;
}

// ---- optimize / adaptive ----

json allocation_json(std::size_t round, const CrawlAllocation& a, const Eigen::VectorXd& estimates,
                     std::optional<double> true_objective) {
  json j{{"round", round},
         {"rates", to_std(a.rates)},
         {"objective", a.objective},
         {"estimates", to_std(estimates)},
         {"budget", a.budget},
         {"lambda", a.lambda}};
  if (true_objective) j["true_objective"] = *true_objective;
  return j;
}

int cmd_optimize(const CommonOptions& opts, std::ostream& out) {
  if (opts.config.empty()) throw UsageError("optimize needs --config");
  const Scenario scenario = parse_scenario(load_json(opts.config));
  const PageModel model = scenario.model();
  const CrawlAllocation a = optimize_rates(model, scenario.budget);
  const fs::path dir = prepare_output(opts, scenario.name);
  json doc = metadata(opts.seed.value_or(scenario.seed));
  doc["name"] = scenario.name;
  doc.update(allocation_json(0, a, model.delta, std::nullopt));
  write_json(dir / "allocation.json", doc);
  out << "objective " << a.objective << ", total rate " << a.rates.sum() << '\n';
  return kSuccess;
}

int cmd_adaptive(const CommonOptions& opts, std::ostream& out) {
  if (opts.config.empty()) throw UsageError("adaptive needs --config");
  Scenario scenario = parse_scenario(load_json(opts.config));
  if (opts.seed) scenario.seed = *opts.seed;
  if (scenario.estimators.empty() && !scenario.oracle) throw ConfigError("scenario lists no estimators");
  const PageModel model = scenario.model();
  const fs::path dir = prepare_output(opts, scenario.name);

  std::vector<std::pair<std::string, AdaptiveConfig>> runs;
  auto base = [&] {
    AdaptiveConfig c;
    c.rounds = scenario.rounds;
    c.steps_per_round = scenario.steps_per_round;
    c.budget = scenario.budget;
    c.seed = scenario.seed;
    c.estimate_clamp = scenario.estimate_clamp;
    return c;
  };
  if (scenario.oracle) {
    AdaptiveConfig c = base();
    c.oracle = true;
    runs.emplace_back("oracle", c);
  }
  for (const auto& e : scenario.estimators) {
    AdaptiveConfig c = base();
    c.estimator = e;
    runs.emplace_back(e.display_label(), c);
  }

  json summary = metadata(scenario.seed);
  summary["name"] = scenario.name;
  summary["pages"] = model.size();
  summary["budget"] = scenario.budget;
  json results = json::array();
  for (const auto& [label, config] : runs) {
    const AdaptiveResult r = adaptive_loop(model, config);
    std::ostringstream lines;
    for (const auto& round : r.rounds) {
      json line = allocation_json(round.round, round.allocation, round.estimates, round.true_objective);
      line["estimator"] = label;
      line["seed"] = scenario.seed;
      lines << line.dump() << '\n';
    }
    const fs::path sub = dir / safe_name(label);
    write_file(sub / "allocations.jsonl", lines.str());

    std::ostringstream traj;
    traj << std::setprecision(std::numeric_limits<double>::max_digits10) << "step";
    for (Eigen::Index i = 0; i < model.size(); ++i) traj << ",page_" << i;
    traj << '\n';
    for (Eigen::Index c = 0; c < r.trajectories.cols(); ++c) {
      traj << (c + 1);
      for (Eigen::Index i = 0; i < model.size(); ++i) traj << ',' << r.trajectories(i, c);
      traj << '\n';
    }
    write_file(sub / "trajectories.csv", traj.str());

    const Eigen::VectorXd& final_rates = r.rounds.back().allocation.rates;
    json res{{"estimator", label},
             {"final_true_objective", r.rounds.back().true_objective},
             {"optimal_objective", r.optimum.objective},
             {"final_rates", to_std(final_rates)},
             {"optimal_rates", to_std(r.optimum.rates)},
             {"abs_rate_gap", to_std((final_rates - r.optimum.rates).cwiseAbs())}};
    if (!config.oracle) res["estimator_config"] = to_json(config.estimator);
    results.push_back(std::move(res));
    out << label << ": final objective " << r.rounds.back().true_objective << " (optimum " << r.optimum.objective
        << ")\n";
  }
  summary["results"] = results;
  write_json(dir / "summary.json", summary);
  return kSuccess;
}

// ---- bench ----

int cmd_bench(const CommonOptions& opts, std::ostream& out) {
  const std::uint64_t seed = opts.seed.value_or(1);
  const std::vector<std::size_t> online_k{1000, 10000, 100000};
  const std::vector<std::size_t> offline_k{1000, 3000, 10000, 30000};
  std::vector<TimingProbe> probes;
  for (const auto& cfg : {EstimatorConfig::lln(), EstimatorConfig::sa(), EstimatorConfig::naive(),
                          EstimatorConfig::sam(StepsizeSchedule::polynomial(0.75), StepsizeSchedule::polynomial(1.3))}) {
    probes.push_back(timing_probe(cfg, online_k, seed));
  }
  probes.push_back(timing_probe(EstimatorConfig::mle(), offline_k, seed));
  probes.push_back(timing_probe(EstimatorConfig::mm(), offline_k, seed));

  json doc = metadata(seed);
  json list = json::array();
  for (const auto& p : probes) {
    list.push_back({{"estimator", p.label}, {"k", p.k}, {"seconds", p.seconds},
                    {"unit", is_online(parse_estimator_kind(p.label)) ? "per_step" : "per_full_solve"}});
    out << std::left << std::setw(8) << p.label;
    for (std::size_t i = 0; i < p.k.size(); ++i) out << "  k=" << p.k[i] << ": " << p.seconds[i] << "s";
    out << '\n';
  }
  doc["probes"] = list;
  if (!opts.out_dir.empty()) {
    const fs::path dir = prepare_output(opts, opts.out_dir);
    write_json(dir / "bench.json", doc);
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online change-rate estimation and crawl-rate allocation"};
  app.require_subcommand(1);

  CommonOptions opts;
  TraceOptions topts;
  std::optional<double> rate;
  std::string schedule_file;
  std::optional<std::string> estimator_list;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Config file (JSON)");
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--seed", opts.seed, "Seed override");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", opts.force, "Overwrite a non-empty output directory");
    sub->add_option("--format", opts.format, "Curve/trajectory format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("-v,--verbose", opts.verbosity, "Verbose output");
  };
  auto add_trace = [&](CLI::App* sub) {
    sub->add_option("--trace", topts.trace, "Change trace file");
    sub->add_option("--trace-format", topts.trace_format, "Trace format id");
    sub->add_option("--time-unit", topts.time_unit, "Unit to express timestamps in (s, min, h, d)");
  };

  auto* simulate = app.add_subcommand("simulate", "Replicated synthetic experiment, or synthetic trace generation");
  add_common(simulate);
  auto* estimate = app.add_subcommand("estimate", "Run estimators on a change trace with simulated crawls");
  add_common(estimate);
  add_trace(estimate);
  estimate->add_option("--rate", rate, "Access rate p");
  estimate->add_option("--schedule", schedule_file, "Access timestamps file (timestamps-v1)");
  estimate->add_option("--estimators", estimator_list, "Comma-separated estimator kinds");
  auto* ingest = app.add_subcommand("ingest", "Parse and summarise a change trace");
  add_common(ingest);
  add_trace(ingest);
  auto* qq = app.add_subcommand("qq", "Exponential Q-Q data for inter-change gaps");
  add_common(qq);
  add_trace(qq);
  qq->add_option("--rate", rate, "Reference exponential rate (default: empirical change rate)");
  auto* optimize = app.add_subcommand("optimize", "Water-filling crawl rates for known change rates");
  add_common(optimize);
  auto* adaptive = app.add_subcommand("adaptive", "Estimate-then-reallocate loop");
  add_common(adaptive);
  auto* bench = app.add_subcommand("bench", "Per-step cost of online estimators vs MLE/MM re-solves");
  add_common(bench);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opts, out, err);
    if (estimate->parsed()) return cmd_estimate(opts, topts, rate, schedule_file, estimator_list, out, err);
    if (ingest->parsed()) return cmd_ingest(opts, topts, out, err);
    if (qq->parsed()) return cmd_qq(opts, topts, rate, out, err);
    if (optimize->parsed()) return cmd_optimize(opts, out);
    if (adaptive->parsed()) return cmd_adaptive(opts, out);
    if (bench->parsed()) return cmd_bench(opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InsufficientData& e) {
    err << "insufficient data: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace crawlrate::cli
