#include "crawlrate/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "crawlrate/error.hpp"
#include "crawlrate/point_process.hpp"
#include "crawlrate/rng.hpp"

namespace crawlrate {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Two-sided standard-normal multiplier for a confidence level.
double normal_multiplier(double level) {
  if (level == 0.95) return 1.96;
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > 1.0 - level) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool solve_now(std::size_t k, std::size_t n_steps, std::uint64_t every) {
  return k == 1 || k % every == 0 || k == n_steps;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(delta > 0.0)) throw InvalidArgument("experiment delta must be positive");
  if (!(rate_p > 0.0)) throw InvalidArgument("experiment rate_p must be positive");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  if (n_runs < 1) throw InvalidArgument("n_runs must be >= 1");
  if (estimators.empty()) throw InvalidArgument("experiment lists no estimators");
  for (const auto& e : estimators) {
    if (e.resolve_every < 1) throw InvalidArgument("resolve_every must be >= 1");
  }
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(run));
}

EstimateTensor run_replications(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_est = config.estimators.size();
  const auto runs = static_cast<Eigen::Index>(config.n_runs);
  const auto steps = static_cast<Eigen::Index>(config.n_steps);

  EstimateTensor tensor;
  tensor.true_delta = config.delta;
  for (const auto& e : config.estimators) tensor.labels.push_back(e.display_label());
  tensor.estimates.assign(n_est, Eigen::MatrixXd(runs, steps));
  tensor.run_seeds.resize(config.n_runs);
  for (std::size_t r = 0; r < config.n_runs; ++r) tensor.run_seeds[r] = run_seed(config.master_seed, r);

  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(config.n_runs)));
  std::vector<std::vector<double>> worker_seconds(jobs, std::vector<double>(n_est, 0.0));

  auto worker = [&](unsigned id) {
    std::vector<Observation> stream(config.n_steps);
    for (std::size_t r = id; r < config.n_runs; r += jobs) {
      IndicatorSimulator sim(config.delta, tensor.run_seeds[r]);
      for (auto& obs : stream) obs = sim.next(config.rate_p);

      const auto row = static_cast<Eigen::Index>(r);
      for (std::size_t e = 0; e < n_est; ++e) {
        const EstimatorConfig& cfg = config.estimators[e];
        Eigen::MatrixXd& out = tensor.estimates[e];
        RateEstimator est(cfg);
        const bool online = is_online(cfg.kind);
        const auto start = Clock::now();
        double current = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = 1; k <= config.n_steps; ++k) {
          est.observe(stream[k - 1], config.rate_p);
          if (online || solve_now(k, config.n_steps, cfg.resolve_every)) current = est.estimate().value();
          out(row, static_cast<Eigen::Index>(k - 1)) = current;
        }
        worker_seconds[id][e] += seconds_since(start);
      }
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < jobs; ++id) pool.emplace_back(worker, id);
  }

  tensor.seconds.assign(n_est, 0.0);
  for (const auto& ws : worker_seconds) {
    for (std::size_t e = 0; e < n_est; ++e) tensor.seconds[e] += ws[e];
  }
  return tensor;
}

ConfidenceBand confidence_band(const Eigen::MatrixXd& runs_by_steps, double level) {
  const auto n = runs_by_steps.rows();
  if (n < 2) throw InsufficientData("confidence band needs at least 2 runs");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must be in (0, 1)");
  ConfidenceBand band;
  band.mean = runs_by_steps.colwise().mean().transpose();
  const Eigen::ArrayXd var =
      (runs_by_steps.rowwise() - band.mean.transpose()).array().square().colwise().sum().transpose() /
      static_cast<double>(n - 1);
  const Eigen::VectorXd half = (normal_multiplier(level) * var.sqrt() / std::sqrt(static_cast<double>(n))).matrix();
  band.lower = band.mean - half;
  band.upper = band.mean + half;
  return band;
}

Eigen::VectorXd rmse_curve(const Eigen::MatrixXd& runs_by_steps, double true_delta) {
  return ((runs_by_steps.array() - true_delta).square().colwise().mean().sqrt()).transpose().matrix();
}

Eigen::VectorXd mean_abs_error_curve(const Eigen::MatrixXd& runs_by_steps, double true_delta) {
  return ((runs_by_steps.array() - true_delta).abs().colwise().mean()).transpose().matrix();
}

SlopeFit rate_slope(const Eigen::VectorXd& error_curve, std::size_t k_min, std::size_t k_max) {
  if (k_min < 1 || k_max <= k_min) throw InvalidArgument("slope window needs 1 <= k_min < k_max");
  if (k_max > static_cast<std::size_t>(error_curve.size())) throw InvalidArgument("slope window exceeds curve length");

  SlopeFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const double err = error_curve(static_cast<Eigen::Index>(k - 1));
    if (!(err > 0.0) || !std::isfinite(err)) {
      ++fit.points_dropped;
      continue;
    }
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.points_used;
  }
  if (fit.points_used < 2) throw InsufficientData("slope fit needs at least 2 positive errors");
  const auto n = static_cast<double>(fit.points_used);
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

std::optional<std::size_t> last_crossover(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = std::min(a.size(), b.size());
  std::optional<std::size_t> last;
  int prev_sign = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a(i) - b(i);
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (prev_sign != 0 && sign != prev_sign) last = static_cast<std::size_t>(i + 1);
    prev_sign = sign;
  }
  return last;
}

ExperimentReport summarize(const ExperimentConfig& config, const EstimateTensor& tensor) {
  ExperimentReport report;
  report.name = config.name;
  report.delta = config.delta;
  report.rate_p = config.rate_p;
  report.n_steps = tensor.steps();
  report.n_runs = tensor.runs();
  report.master_seed = config.master_seed;
  report.slope_k_max = report.n_steps;
  report.slope_k_min = report.n_steps >= 1000 ? 100 : std::max<std::size_t>(1, report.n_steps / 10);

  const auto last = static_cast<Eigen::Index>(report.n_steps) - 1;
  std::vector<Eigen::VectorXd> rmse;
  for (std::size_t e = 0; e < tensor.estimates.size(); ++e) {
    const Eigen::MatrixXd& m = tensor.estimates[e];
    const EstimatorConfig& cfg = config.estimators[e];
    EstimatorSummary s;
    s.label = tensor.labels[e];
    s.kind = std::string(to_string(cfg.kind));
    rmse.push_back(rmse_curve(m, tensor.true_delta));
    s.terminal_mean = m.col(last).mean();
    s.terminal_rmse = rmse.back()(last);
    s.terminal_ci_halfwidth = 0.0;
    if (m.rows() >= 2) {
      const ConfidenceBand band = confidence_band(m.rightCols(1));
      s.terminal_ci_halfwidth = band.upper(0) - band.mean(0);
    }
    if (report.slope_k_max > report.slope_k_min) {
      try {
        s.slope = rate_slope(mean_abs_error_curve(m, tensor.true_delta), report.slope_k_min, report.slope_k_max);
      } catch (const InsufficientData&) {
      }
    }
    s.seconds_per_step = tensor.seconds[e] / static_cast<double>(std::max<std::size_t>(1, report.n_runs * report.n_steps));
    s.resolve_every = is_online(cfg.kind) ? 1 : cfg.resolve_every;
    if (cfg.kind == EstimatorKind::Sam) {
      s.conjectured_rate_exponent = validate_sam(SamSchedule(cfg.beta, cfg.eta, cfg.omega)).conjectured_rate_exponent;
    }
    report.estimators.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < rmse.size(); ++i) {
    for (std::size_t j = i + 1; j < rmse.size(); ++j) {
      if (auto step = last_crossover(rmse[i], rmse[j])) {
        report.rmse_crossovers.push_back({tensor.labels[i], tensor.labels[j], *step});
      }
    }
  }
  return report;
}

TimingProbe timing_probe(const EstimatorConfig& estimator, const std::vector<std::size_t>& k_values,
                         std::uint64_t seed, double delta, double rate_p) {
  TimingProbe probe;
  probe.label = estimator.display_label();
  if (k_values.empty()) return probe;

  constexpr std::size_t kWindow = 2000;
  const std::size_t k_max = *std::max_element(k_values.begin(), k_values.end());
  IndicatorSimulator sim(delta, seed);
  std::vector<Observation> stream(k_max + kWindow);
  for (auto& obs : stream) obs = sim.next(rate_p);

  const bool online = is_online(estimator.kind);
  for (std::size_t k : k_values) {
    if (k < 1) throw InvalidArgument("timing probe k must be >= 1");
  }
  // Repetitions are interleaved across k so that drift in machine speed hits every k alike.
  std::vector<double> best(k_values.size(), std::numeric_limits<double>::infinity());
  if (online) {
    std::vector<RateEstimator> warm;
    for (std::size_t k : k_values) {
      RateEstimator est(estimator);
      for (std::size_t i = 0; i < k; ++i) est.observe(stream[i], rate_p);
      warm.push_back(std::move(est));
    }
    double sink = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
      for (std::size_t j = 0; j < k_values.size(); ++j) {
        RateEstimator est = warm[j];
        const std::size_t k = k_values[j];
        const auto start = Clock::now();
        for (std::size_t i = k; i < k + kWindow; ++i) {
          est.observe(stream[i], rate_p);
          sink += *est.estimate();
        }
        best[j] = std::min(best[j], seconds_since(start) / static_cast<double>(kWindow));
      }
    }
    if (sink == -1.0) best.assign(best.size(), 0.0);  // keeps the loop observable
  } else {
    const ClampRange clamp = estimator.clamp.value_or(default_clamp(rate_p));
    for (int rep = 0; rep < 7; ++rep) {
      for (std::size_t j = 0; j < k_values.size(); ++j) {
        const std::span<const Observation> prefix(stream.data(), k_values[j]);
        const auto start = Clock::now();
        const SolveReport r = estimator.kind == EstimatorKind::Mle ? mle_solve(prefix, clamp, estimator.tol)
                                                                   : mm_solve(prefix, clamp, estimator.tol);
        best[j] = std::min(best[j], seconds_since(start));
        if (r.iterations < 0) best[j] = 0.0;
      }
    }
  }
  probe.k = k_values;
  probe.seconds = best;
  return probe;
}

}  // namespace crawlrate
