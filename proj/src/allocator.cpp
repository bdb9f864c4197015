#include "crawlrate/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crawlrate/error.hpp"
#include "crawlrate/point_process.hpp"
#include "crawlrate/rng.hpp"

namespace crawlrate {

PageModel::PageModel(Eigen::VectorXd delta_in, Eigen::VectorXd weights_in)
    : delta(std::move(delta_in)), weights(std::move(weights_in)) {
  if (delta.size() != weights.size()) throw InvalidArgument("page model: delta and weight sizes differ");
  if (delta.size() == 0) throw InvalidArgument("page model needs at least one page");
  if (!(delta.array() > 0.0).all() || !delta.allFinite()) throw InvalidArgument("page change rates must be positive");
  if (!(weights.array() > 0.0).all() || !weights.allFinite()) throw InvalidArgument("page weights must be positive");
}

double freshness_objective(const Eigen::VectorXd& rates, const PageModel& model) {
  if (rates.size() != model.size()) throw InvalidArgument("rate vector and page model sizes differ");
  if ((rates.array() < 0.0).any()) throw InvalidArgument("crawl rates must be non-negative");
  return freshness_objective(rates, model.delta, model.weights);
}

CrawlAllocation optimize_rates(const PageModel& model, double budget, double tol) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw InvalidArgument("budget must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (model.size() == 0) throw InvalidArgument("page model is empty");

  const Eigen::ArrayXd delta = model.delta.array();
  const Eigen::ArrayXd root_wd = (model.weights.array() * delta).sqrt();
  // Page i receives a positive rate iff lambda < w_i / delta_i.
  const Eigen::ArrayXd activation = model.weights.array() / delta;

  auto rates_at = [&](double lambda) -> Eigen::ArrayXd {
    return (root_wd / std::sqrt(lambda) - delta).max(0.0);
  };

  double hi = activation.maxCoeff();  // spends nothing
  double lo = hi;
  while (rates_at(lo).sum() < budget) lo *= 0.25;

  // Invariant: spend(lo) >= budget > spend(hi).
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    const double spend = rates_at(mid).sum();
    if (std::abs(spend - budget) <= tol * budget) {
      lo = hi = mid;
      break;
    }
    if (spend > budget) lo = mid; else hi = mid;
  }

  // Exact multiplier for the active set found above:
  // sum_A (sqrt(w_i delta_i / lambda) - delta_i) = B.
  double lambda = lo;
  for (int pass = 0; pass < 8; ++pass) {
    const auto active = (activation > lambda).cast<double>();
    const double denom = budget + (active * delta).sum();
    const double root_lambda = (active * root_wd).sum() / denom;
    const double refined = root_lambda * root_lambda;
    const bool same_set = ((activation > refined) == (activation > lambda)).all();
    lambda = refined;
    if (same_set) break;
  }

  CrawlAllocation out;
  out.rates = rates_at(lambda).matrix();
  out.weights = model.weights;
  out.budget = budget;
  out.lambda = lambda;
  out.objective = freshness_objective(out.rates, model.delta, model.weights);
  return out;
}

AdaptiveResult adaptive_loop(const PageModel& true_model, const AdaptiveConfig& config) {
  if (config.rounds < 1) throw InvalidArgument("adaptive loop needs at least one round");
  if (config.steps_per_round < 1) throw InvalidArgument("adaptive loop needs at least one step per round");
  if (!(config.budget > 0.0)) throw InvalidArgument("budget must be positive");
  const ClampRange clamp = config.estimate_clamp;
  if (!(clamp.lo > 0.0) || !(clamp.hi > clamp.lo)) throw InvalidArgument("estimate clamp needs 0 < lo < hi");

  const Eigen::Index n = true_model.size();
  const auto steps = static_cast<Eigen::Index>(config.steps_per_round);

  std::vector<IndicatorSimulator> pages;
  std::vector<RateEstimator> estimators;
  pages.reserve(static_cast<std::size_t>(n));
  estimators.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    pages.emplace_back(true_model.delta(i), derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    estimators.emplace_back(config.estimator);
  }

  AdaptiveResult result;
  result.trajectories = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(config.rounds) * steps,
                                                  std::numeric_limits<double>::quiet_NaN());
  result.optimum = optimize_rates(true_model, config.budget);

  Eigen::VectorXd rates = Eigen::VectorXd::Constant(n, config.budget / static_cast<double>(n));
  {
    CrawlAllocation start;
    start.rates = rates;
    start.weights = true_model.weights;
    start.budget = config.budget;
    start.objective = freshness_objective(rates, true_model);
    result.rounds.push_back({0, start, Eigen::VectorXd(), start.objective});
  }

  const bool offline = !is_online(config.estimator.kind);
  for (std::size_t round = 1; round <= config.rounds; ++round) {
    const Eigen::Index first_col = static_cast<Eigen::Index>(round - 1) * steps;
    Eigen::VectorXd estimates(n);
    if (config.oracle) {
      estimates = true_model.delta;
      result.trajectories.middleCols(first_col, steps).colwise() = true_model.delta;
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        auto& est = estimators[static_cast<std::size_t>(i)];
        auto& sim = pages[static_cast<std::size_t>(i)];
        const double p = rates(i);
        for (Eigen::Index s = 0; s < steps; ++s) {
          const Eigen::Index col = first_col + s;
          if (p > 0.0) est.observe(sim.next(p), p);
          // Offline solvers are queried once per round; in between the last value is carried.
          const bool query = !offline || s + 1 == steps;
          if (query && est.steps() > 0) {
            result.trajectories(i, col) = est.estimate().value();
          } else if (col > 0) {
            result.trajectories(i, col) = result.trajectories(i, col - 1);
          }
        }
        const double raw = est.estimate().value_or(clamp.lo);
        estimates(i) = std::isfinite(raw) ? std::clamp(raw, clamp.lo, clamp.hi) : clamp.lo;
      }
    }
    CrawlAllocation alloc = optimize_rates(PageModel(estimates, true_model.weights), config.budget);
    rates = alloc.rates;
    const double true_objective = freshness_objective(rates, true_model);
    result.rounds.push_back({round, std::move(alloc), std::move(estimates), true_objective});
  }
  return result;
}

}  // namespace crawlrate
