#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "crawlrate/estimators.hpp"

namespace crawlrate {

/// Per-page change rates and importance weights.
struct PageModel {
  Eigen::VectorXd delta;
  Eigen::VectorXd weights;

  PageModel() = default;
  /// Throws InvalidArgument on size mismatch or non-positive entries.
  PageModel(Eigen::VectorXd delta, Eigen::VectorXd weights);

  Eigen::Index size() const noexcept { return delta.size(); }
};

/// F(p) = sum_i w_i p_i / (p_i + delta_i), the long-run weighted freshness.
template <typename DerivedP, typename DerivedD, typename DerivedW>
typename DerivedP::Scalar freshness_objective(const Eigen::MatrixBase<DerivedP>& rates,
                                              const Eigen::MatrixBase<DerivedD>& delta,
                                              const Eigen::MatrixBase<DerivedW>& weights) {
  const auto p = rates.array();
  return (weights.array() * p / (p + delta.array())).sum();
}

/// Checked form: throws InvalidArgument on dimension mismatch or negative rates.
double freshness_objective(const Eigen::VectorXd& rates, const PageModel& model);

struct CrawlAllocation {
  Eigen::VectorXd rates;
  Eigen::VectorXd weights;
  double budget = 0.0;
  double objective = 0.0;  // F(rates) under the model the allocation was computed for
  double lambda = 0.0;     // budget multiplier; 0 when not computed by water-filling
};

// Water-filling: p_i(lambda) = max(0, sqrt(w_i delta_i / lambda) - delta_i), with
// lambda found by bisection so that sum p_i(lambda) = budget, then refined in
// closed form on the active set. The objective is strictly increasing in every
// p_i, so the budget always binds.
CrawlAllocation optimize_rates(const PageModel& model, double budget, double tol = 1e-12);

// ---- estimate-then-reallocate loop ----

struct AdaptiveConfig {
  EstimatorConfig estimator;
  std::size_t rounds = 1;
  std::size_t steps_per_round = 50;
  double budget = 1.0;
  std::uint64_t seed = 0;
  /// Feed the true change rates to the optimiser instead of estimates.
  bool oracle = false;
  /// Estimates are clamped into this range before optimisation.
  ClampRange estimate_clamp{1e-6, 1e6};
};

struct AdaptiveRound {
  std::size_t round;            // 0 is the uniform B/N start
  CrawlAllocation allocation;   // objective is under the model used to pick the rates
  Eigen::VectorXd estimates;    // clamped estimates fed to the optimiser; empty for round 0
  double true_objective;        // F(rates) under the true model
};

struct AdaptiveResult {
  std::vector<AdaptiveRound> rounds;
  /// pages x (rounds * steps_per_round) raw estimate trajectories (NaN before a page's first estimate).
  Eigen::MatrixXd trajectories;
  /// Water-filling allocation for the true model, for reference.
  CrawlAllocation optimum;
};

AdaptiveResult adaptive_loop(const PageModel& true_model, const AdaptiveConfig& config);

}  // namespace crawlrate
