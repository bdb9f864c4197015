#include <doctest.h>

#include <cmath>
#include <random>

#include "crawlrate/allocator.hpp"
#include "crawlrate/error.hpp"
#include "oracles.hpp"

using namespace crawlrate;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

PageModel two_group_model() {
  Eigen::VectorXd delta(50), w(50);
  for (int i = 0; i < 50; ++i) {
    delta(i) = i < 7 ? 4.5 / 7.0 : 0.5 / 43.0;
    w(i) = i < 7 ? 2.0 : 1.0;
  }
  return PageModel(delta, w);
}

struct Instance {
  std::vector<double> delta, w;
  double budget;
};

Instance random_instance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> size(1, 5);
  std::uniform_real_distribution<double> d(0.2, 3.0), w(0.5, 2.0), b(0.2, 3.0);
  Instance inst;
  const int n = size(gen);
  for (int i = 0; i < n; ++i) {
    inst.delta.push_back(d(gen));
    inst.w.push_back(w(gen));
  }
  inst.budget = b(gen);
  return inst;
}

CrawlAllocation solve(const Instance& inst) {
  return optimize_rates(PageModel(Eigen::Map<const Eigen::VectorXd>(inst.delta.data(), inst.delta.size()),
                                  Eigen::Map<const Eigen::VectorXd>(inst.w.data(), inst.w.size())),
                        inst.budget);
}

}  // namespace

TEST_CASE("objective: template and checked forms agree") {
  Eigen::Vector3d p(1.0, 0.0, 2.0), d(1.0, 2.0, 2.0), w(1.0, 1.0, 3.0);
  CHECK(freshness_objective(p, d, w) == doctest::Approx(0.5 + 0.0 + 1.5));
  const PageModel model(d, w);
  CHECK(freshness_objective(Eigen::VectorXd(p), model) == doctest::Approx(2.0));
  CHECK_THROWS_AS(freshness_objective(Eigen::VectorXd::Ones(2), model), InvalidArgument);
  CHECK_THROWS_AS(freshness_objective(Eigen::VectorXd::Constant(3, -1.0), model), InvalidArgument);
  Eigen::Vector3f pf(1.0f, 0.0f, 2.0f), df(1.0f, 2.0f, 2.0f), wf(1.0f, 1.0f, 3.0f);
  CHECK(freshness_objective(pf, df, wf) == doctest::Approx(2.0));
}

TEST_CASE("page model validation") {
  CHECK_THROWS_AS(PageModel(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)), InvalidArgument);
  CHECK_THROWS_AS(PageModel(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(PageModel(Eigen::VectorXd::Ones(2), -Eigen::VectorXd::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(PageModel(Eigen::VectorXd(), Eigen::VectorXd()), InvalidArgument);
  CHECK_THROWS_AS(optimize_rates(PageModel(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)), 0.0),
                  InvalidArgument);
}

TEST_CASE("single page takes the whole budget") {
  const auto a = optimize_rates(PageModel(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Ones(1)), 3.5);
  CHECK(a.rates(0) == doctest::Approx(3.5));
  CHECK(a.objective == doctest::Approx(3.5 / 5.5));
}

TEST_CASE("identical pages split the budget evenly") {
  const auto a = optimize_rates(PageModel(Eigen::VectorXd::Constant(4, 1.5), Eigen::VectorXd::Ones(4)), 2.0);
  for (int i = 0; i < 4; ++i) CHECK(a.rates(i) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-group scenario: budget binds, groups match the reference optimum") {
  const PageModel model = two_group_model();
  const auto a = optimize_rates(model, 5.0);
  CHECK(std::abs(a.rates.sum() - 5.0) <= 1e-9);
  CHECK(a.rates(0) == doctest::Approx(0.25891).epsilon(1e-4));
  CHECK(a.rates(20) == doctest::Approx(0.07413).epsilon(1e-4));
  CHECK(a.objective == doctest::Approx(41.189).epsilon(1e-4));
  // KKT: every active page has the same marginal gain w delta / (p + delta)^2 = lambda
  for (int i = 0; i < 50; ++i) {
    const double g = model.weights(i) * model.delta(i) / std::pow(a.rates(i) + model.delta(i), 2);
    CHECK(g == doctest::Approx(a.lambda).epsilon(1e-9));
  }
}

TEST_CASE("inactive pages get zero rate and a lower marginal gain") {
  Eigen::VectorXd d(3), w(3);
  d << 0.1, 0.1, 50.0;
  w << 1.0, 1.0, 0.01;
  const auto a = optimize_rates(PageModel(d, w), 0.5);
  CHECK(a.rates(2) == 0.0);
  CHECK(w(2) / d(2) <= a.lambda);
  CHECK(a.rates.sum() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: water-filling matches projected gradient and beats the lattice") {
  std::mt19937_64 gen(2024);
  for (int t = 0; t < 25; ++t) {
    const Instance inst = random_instance(gen);
    const auto a = solve(inst);
    const auto pg = oracle::projected_gradient(inst.delta, inst.w, inst.budget);
    CHECK(std::abs(a.objective - oracle::freshness(pg, inst.delta, inst.w)) < 1e-6);
    CHECK(a.rates.sum() == doctest::Approx(inst.budget).epsilon(1e-12));
    CHECK((a.rates.array() >= 0.0).all());
    double grid;
    if (inst.delta.size() <= 2) {
      grid = oracle::grid_best_exhaustive(inst.delta, inst.w, inst.budget, 1e-3);
    } else {
      grid = oracle::grid_best_sampled(inst.delta, inst.w, inst.budget, 1e-3, to_std(a.rates), 2, 2000, 7);
    }
    CHECK(a.objective >= grid - 1e-12);
  }
}

TEST_CASE("property: scaling weights leaves the rates unchanged") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    Instance inst = random_instance(gen);
    const auto a = solve(inst);
    for (double& w : inst.w) w *= 7.5;
    const auto b = solve(inst);
    CHECK((a.rates - b.rates).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(b.objective == doctest::Approx(7.5 * a.objective).epsilon(1e-12));
  }
}

TEST_CASE("property: scaling change rates and budget together scales the rates") {
  std::mt19937_64 gen(6);
  for (int t = 0; t < 20; ++t) {
    Instance inst = random_instance(gen);
    const auto a = solve(inst);
    for (double& d : inst.delta) d *= 3.0;
    inst.budget *= 3.0;
    const auto b = solve(inst);
    CHECK((3.0 * a.rates - b.rates).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-10));
  }
}

TEST_CASE("property: objective is increasing in the budget") {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 20; ++t) {
    Instance inst = random_instance(gen);
    double prev = -1.0;
    for (double b : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      inst.budget = b;
      const double f = solve(inst).objective;
      CHECK(f > prev);
      prev = f;
    }
  }
}

TEST_CASE("adaptive loop: oracle mode equals direct optimisation") {
  const PageModel model = two_group_model();
  AdaptiveConfig cfg;
  cfg.oracle = true;
  cfg.rounds = 3;
  cfg.budget = 5.0;
  const auto r = adaptive_loop(model, cfg);
  const auto direct = optimize_rates(model, 5.0);
  REQUIRE(r.rounds.size() == 4);
  CHECK(r.rounds[0].allocation.rates.isApproxToConstant(0.1));
  for (std::size_t i = 1; i < r.rounds.size(); ++i) {
    CHECK(r.rounds[i].allocation.rates == direct.rates);
    CHECK(r.rounds[i].true_objective == direct.objective);
  }
}

TEST_CASE("adaptive loop: deterministic, budget respected, trajectories filled") {
  Eigen::VectorXd d(3), w(3);
  d << 2.0, 0.5, 0.1;
  w << 1.0, 2.0, 1.0;
  const PageModel model(d, w);
  AdaptiveConfig cfg;
  cfg.estimator = EstimatorConfig::sa();
  cfg.rounds = 10;
  cfg.steps_per_round = 30;
  cfg.budget = 2.0;
  cfg.seed = 42;
  const auto a = adaptive_loop(model, cfg);
  const auto b = adaptive_loop(model, cfg);
  REQUIRE(a.rounds.size() == 11);
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    CHECK(a.rounds[i].allocation.rates == b.rounds[i].allocation.rates);
    CHECK(a.rounds[i].allocation.rates.sum() == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK(a.trajectories.cols() == 300);
  CHECK(a.trajectories.allFinite());

  cfg.estimator = EstimatorConfig::mle();
  const auto m = adaptive_loop(model, cfg);
  CHECK(m.rounds.back().estimates.allFinite());
}

TEST_CASE("objective: zero rates, equal rates and saturation") {
  const PageModel two(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2));
  CHECK(freshness_objective(Eigen::VectorXd::Zero(2), two) == 0.0);
  CHECK(freshness_objective(Eigen::VectorXd::Ones(2), two) == doctest::Approx(1.0));
  Eigen::VectorXd d(2), w(2);
  d << 0.5, 2.0;
  w << 3.0, 1.5;
  const PageModel m(d, w);
  double prev = 0.0;
  for (double p : {1.0, 10.0, 1e3, 1e6}) {
    const double f = freshness_objective(Eigen::VectorXd::Constant(2, p), m);
    CHECK(f > prev);
    CHECK(f < w.sum());
    prev = f;
  }
  CHECK(prev == doctest::Approx(w.sum()).epsilon(1e-5));
  CHECK_THROWS_AS(freshness_objective(-Eigen::VectorXd::Ones(2), m), InvalidArgument);
}

TEST_CASE("stored objective equals the recomputed objective") {
  std::mt19937_64 gen(55);
  for (int t = 0; t < 30; ++t) {
    const Instance inst = random_instance(gen);
    const auto a = solve(inst);
    const double f = oracle::freshness(to_std(a.rates), inst.delta, inst.w);
    CHECK(std::abs(a.objective - f) <= 1e-12 * std::max(1.0, f));
  }
}

TEST_CASE("three-page instance against both oracles") {
  const std::vector<double> delta{0.5, 1.0, 4.0}, w{1.0, 2.0, 1.0};
  const auto a = optimize_rates(PageModel(Eigen::Map<const Eigen::VectorXd>(delta.data(), 3),
                                          Eigen::Map<const Eigen::VectorXd>(w.data(), 3)),
                                2.0);
  const auto pg = oracle::projected_gradient(delta, w, 2.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(a.rates(i) - pg[static_cast<std::size_t>(i)]) < 1e-6);
  CHECK(a.objective >= oracle::grid_best_exhaustive(delta, w, 2.0, 1e-2) - 1e-12);
  CHECK(a.rates.sum() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("adaptive loop: identical pages stay near the uniform split") {
  const PageModel model(Eigen::VectorXd::Constant(4, 1.0), Eigen::VectorXd::Ones(4));
  AdaptiveConfig cfg;
  cfg.estimator = EstimatorConfig::lln();
  cfg.rounds = 10;
  cfg.steps_per_round = 200;
  cfg.budget = 2.0;
  cfg.seed = 5;
  const auto r = adaptive_loop(model, cfg);
  const auto& last = r.rounds.back().allocation.rates;
  CHECK((last.array() - 0.5).abs().maxCoeff() < 0.15);
  CHECK(r.rounds.back().true_objective == doctest::Approx(r.optimum.objective).epsilon(0.01));
}

TEST_CASE("adaptive loop: single page always gets the budget") {
  const PageModel model(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Ones(1));
  AdaptiveConfig cfg;
  cfg.estimator = EstimatorConfig::sa();
  cfg.rounds = 4;
  cfg.steps_per_round = 20;
  cfg.budget = 1.7;
  for (const auto& round : adaptive_loop(model, cfg).rounds) CHECK(round.allocation.rates(0) == doctest::Approx(1.7));
}
