#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crawlrate/estimators.hpp"

namespace crawlrate {

struct ExperimentConfig {
  std::string name = "experiment";
  double delta = 5.0;
  double rate_p = 3.0;
  std::size_t n_steps = 10000;
  std::size_t n_runs = 100;
  std::vector<EstimatorConfig> estimators;
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;  // worker threads; results do not depend on it

  void validate() const;
};

// estimates[e](r, k - 1) is estimator e's value after k indicators in run r.
// Every estimator of a run consumes the same indicator stream.
struct EstimateTensor {
  std::vector<std::string> labels;
  std::vector<Eigen::MatrixXd> estimates;  // one runs x steps matrix per estimator
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> seconds;             // wall time spent inside each estimator, summed over runs
  double true_delta = 0.0;

  std::size_t runs() const { return estimates.empty() ? 0 : static_cast<std::size_t>(estimates.front().rows()); }
  std::size_t steps() const { return estimates.empty() ? 0 : static_cast<std::size_t>(estimates.front().cols()); }
};

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run);

EstimateTensor run_replications(const ExperimentConfig& config);

struct ConfidenceBand {
  Eigen::VectorXd mean;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Per-step normal-approximation band mean +/- z sd / sqrt(runs); z = 1.96 at level 0.95.
ConfidenceBand confidence_band(const Eigen::MatrixXd& runs_by_steps, double level = 0.95);

/// sqrt(mean over runs of (estimate - delta)^2), per step.
Eigen::VectorXd rmse_curve(const Eigen::MatrixXd& runs_by_steps, double true_delta);

/// mean over runs of |estimate - delta|, per step.
Eigen::VectorXd mean_abs_error_curve(const Eigen::MatrixXd& runs_by_steps, double true_delta);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points_used = 0;
  std::size_t points_dropped = 0;  // non-positive or non-finite errors in the window
};

/// Least-squares slope of log(error) against log(k) over k in [k_min, k_max],
/// where error_curve(k - 1) is the error after k steps.
SlopeFit rate_slope(const Eigen::VectorXd& error_curve, std::size_t k_min, std::size_t k_max);

/// Last step at which curves a and b swap order (a < b before vs after), if any.
std::optional<std::size_t> last_crossover(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct EstimatorSummary {
  std::string label;
  std::string kind;
  double terminal_mean;
  double terminal_rmse;
  double terminal_ci_halfwidth;
  std::optional<SlopeFit> slope;
  double seconds_per_step;
  std::uint64_t resolve_every;
  std::optional<double> conjectured_rate_exponent;  // SAM only; logged, never checked
};

struct ExperimentReport {
  std::string name;
  double delta;
  double rate_p;
  std::size_t n_steps;
  std::size_t n_runs;
  std::uint64_t master_seed;
  std::size_t slope_k_min;
  std::size_t slope_k_max;
  std::vector<EstimatorSummary> estimators;
  // (label a, label b, step) for each pair of RMSE curves that cross.
  struct Crossover {
    std::string a;
    std::string b;
    std::size_t step;
  };
  std::vector<Crossover> rmse_crossovers;
};

ExperimentReport summarize(const ExperimentConfig& config, const EstimateTensor& tensor);

struct TimingProbe {
  std::string label;
  std::vector<std::size_t> k;
  std::vector<double> seconds;  // per step for online kinds, per full re-solve for MLE/MM
};

/// Online kinds: per-step wall time measured in a window starting at each k.
/// MLE/MM: wall time of one full solve over the first k indicators.
TimingProbe timing_probe(const EstimatorConfig& estimator, const std::vector<std::size_t>& k_values,
                         std::uint64_t seed = 1, double delta = 5.0, double rate_p = 3.0);

}  // namespace crawlrate
