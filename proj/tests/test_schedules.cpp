#include <doctest.h>

#include <cmath>

#include "crawlrate/error.hpp"
#include "crawlrate/schedules.hpp"

using namespace crawlrate;

namespace {

SamRegime classify(double beta, double eta, double omega = 1.0) {
  return validate_sam(SamSchedule(StepsizeSchedule::polynomial(beta), StepsizeSchedule::polynomial(eta), omega))
      .regime;
}

// Partial sums of (k+1)^-e up to n, used to eyeball divergence of p-series.
double partial_sum(double e, std::uint64_t n) {
  double s = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) s += std::pow(static_cast<double>(k) + 1.0, -e);
  return s;
}

}  // namespace

TEST_CASE("schedule values") {
  CHECK(StepsizeSchedule::polynomial(0.5)(0) == 1.0);
  CHECK(StepsizeSchedule::polynomial(0.5)(3) == doctest::Approx(0.5));
  CHECK(StepsizeSchedule::power(0.75)(0) == 1.0);
  CHECK(StepsizeSchedule::power(1.0, 2.0)(10) == doctest::Approx(20.0));
  CHECK(StepsizeSchedule::constant(1.0)(12345) == 1.0);
  CHECK(StepsizeSchedule::log()(0) == doctest::Approx(std::log(2.0)));
  CHECK(StepsizeSchedule::sqrt()(0) == 1.0);
  CHECK(StepsizeSchedule::sqrt()(16) == doctest::Approx(4.0));
  for (std::uint64_t k : {0ULL, 1ULL, 10ULL, 1000000ULL}) {
    CHECK(StepsizeSchedule::log()(k) > 0.0);
    CHECK(StepsizeSchedule::sqrt()(k) > 0.0);
  }
}

TEST_CASE("schedule parsing round-trips") {
  for (const char* text : {"poly:0.75", "pow:0.75", "pow:1:2", "const:1", "log", "sqrt", "poly:1.3"}) {
    CHECK(parse_schedule(text).to_string() == text);
  }
  CHECK_THROWS_AS(parse_schedule("poly:"), InvalidArgument);
  CHECK_THROWS_AS(parse_schedule("poly:abc"), InvalidArgument);
  CHECK_THROWS_AS(parse_schedule("cubic"), InvalidArgument);
  CHECK_THROWS_AS(parse_schedule("const:-1"), InvalidArgument);
  CHECK_THROWS_AS(make_polynomial(0.0), InvalidArgument);
  CHECK_THROWS_AS(make_polynomial(-0.5), InvalidArgument);
}

TEST_CASE("custom schedules are evaluated but never validated") {
  const auto s = StepsizeSchedule::custom([](std::uint64_t k) { return 1.0 / (static_cast<double>(k) + 2.0); });
  CHECK(s(0) == 0.5);
  CHECK(validate_sa(s).convergent == Validity::Unknown);
  CHECK(validate_lln(s).convergent == Validity::Unknown);
  const auto bad = StepsizeSchedule::custom([](std::uint64_t) { return -1.0; });
  CHECK_THROWS_AS(bad(0), InvalidArgument);
}

TEST_CASE("SA validity follows the p-series conditions") {
  CHECK(validate_sa(make_polynomial(0.75)).convergent == Validity::Valid);
  CHECK(validate_sa(make_polynomial(1.0)).convergent == Validity::Valid);
  CHECK(validate_sa(make_polynomial(0.5)).convergent == Validity::Invalid);
  CHECK(validate_sa(make_polynomial(0.4)).convergent == Validity::Invalid);
  CHECK(validate_sa(make_polynomial(1.2)).convergent == Validity::Invalid);
  CHECK(validate_sa(StepsizeSchedule::constant(0.1)).convergent == Validity::Invalid);
  CHECK(*validate_sa(make_polynomial(0.75)).rate_exponent == doctest::Approx(0.375));
  CHECK_FALSE(validate_sa(make_polynomial(1.0)).rate_exponent.has_value());
}

TEST_CASE("numerical heuristics agree with the p-series verdicts") {
  // a divergent series keeps growing by ~log between 1e5 and 1e6 terms; a summable one stalls
  const double grow_divergent = partial_sum(1.0, 1000000) - partial_sum(1.0, 100000);
  const double grow_summable = partial_sum(1.5, 1000000) - partial_sum(1.5, 100000);
  CHECK(grow_divergent > 2.0);
  CHECK(grow_summable < 0.01);
  // eta = 0.75: squares (exponent 1.5) are summable, the series itself is not
  CHECK(partial_sum(0.75, 1000000) > 100.0);
  CHECK(validate_sa(make_polynomial(0.75)).convergent == Validity::Valid);
}

TEST_CASE("LLN validity and rate exponents") {
  const auto constant = validate_lln(StepsizeSchedule::constant(1.0));
  CHECK(constant.convergent == Validity::Valid);
  CHECK(constant.rate_guaranteed == Validity::Valid);
  CHECK(*constant.rate_exponent == doctest::Approx(0.5));
  CHECK(*validate_lln(StepsizeSchedule::power(0.75)).rate_exponent == doctest::Approx(0.25));
  CHECK(*validate_lln(StepsizeSchedule::sqrt()).rate_exponent == doctest::Approx(0.5));
  CHECK(*validate_lln(StepsizeSchedule::log()).rate_exponent == doctest::Approx(0.5));
  CHECK(validate_lln(StepsizeSchedule::power(1.0, 2.0)).convergent == Validity::Invalid);
}

TEST_CASE("SAM regime classification") {
  CHECK(classify(0.6, 1.2) == SamRegime::OneTimescale);
  CHECK(classify(0.75, 1.3) == SamRegime::TwoTimescale);
  CHECK(classify(0.5, 0.8) == SamRegime::Conjecture);
  CHECK(classify(0.4, 0.8) == SamRegime::Conjecture);
  CHECK(classify(0.75, 1.0) == SamRegime::Invalid);
  CHECK(classify(0.75, 1.25) == SamRegime::Invalid);  // boundary eta = beta + 1/2 is excluded
  CHECK(classify(1.0, 2.0) == SamRegime::OneTimescale);
  CHECK(classify(0.75, 1.6) == SamRegime::Invalid);
  CHECK(classify(0.3, 0.2) == SamRegime::Invalid);
  CHECK(classify(1.2, 1.9) == SamRegime::Invalid);
  CHECK(classify(0.7, 0.7) == SamRegime::Experimental);
  CHECK(classify(0.7, 0.7, 0.5) == SamRegime::Experimental);

  const SamSchedule nonpoly(StepsizeSchedule::constant(0.5), make_polynomial(1.0));
  CHECK(validate_sam(nonpoly).regime == SamRegime::Unknown);
  CHECK(nonpoly.regime() == SamRegime::Unknown);
}

TEST_CASE("SAM zeta and gamma limits match the classification") {
  const SamSchedule two(make_polynomial(0.75), make_polynomial(1.3));
  const auto verdict = validate_sam(two);
  REQUIRE(verdict.zeta_limit.has_value());
  CHECK(*verdict.zeta_limit == 1.0);
  CHECK(two.zeta(1000000) == doctest::Approx(1.0).epsilon(1e-3));
  // two-timescale: beta_k / gamma_k -> 0
  const double ratio_early = make_polynomial(0.75)(1000) / two.gamma(1000);
  const double ratio_late = make_polynomial(0.75)(1000000) / two.gamma(1000000);
  CHECK(ratio_late < ratio_early);
  CHECK(ratio_late == doctest::Approx(std::pow(1000001.0, -0.2)));
  CHECK(*verdict.conjectured_rate_exponent == doctest::Approx(0.375));

  const SamSchedule same(make_polynomial(0.6), make_polynomial(0.6), 0.25);
  CHECK(*validate_sam(same).zeta_limit == doctest::Approx(0.75));
  CHECK(same.zeta(1000000) == doctest::Approx(0.75).epsilon(1e-5));
  CHECK(SamSchedule(make_polynomial(0.6), make_polynomial(0.6)).zeta(5) == 0.0);
}

TEST_CASE("SAM zeta uses beta_0 for the missing beta_{-1}") {
  const SamSchedule s(make_polynomial(0.5), make_polynomial(0.9), 1.0);
  CHECK(s.zeta(0) == doctest::Approx(1.0 - 1.0));
  CHECK(s.zeta(1) == doctest::Approx((std::pow(2.0, -0.5) - std::pow(2.0, -0.9)) / 1.0));
  CHECK_THROWS_AS(SamSchedule(make_polynomial(0.5), make_polynomial(0.9), 0.0), InvalidArgument);
}

TEST_CASE("one-timescale SAM: gamma equals beta and zeta tends to one") {
  const StepsizeSchedule beta = make_polynomial(0.6);
  const SamSchedule s(beta, make_polynomial(1.2));
  for (std::uint64_t k : {0ULL, 5ULL, 1000ULL, 1000000ULL}) CHECK(s.gamma(k) == doctest::Approx(beta(k)).epsilon(1e-12));
  CHECK(s.zeta(10000000) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s.gamma(10000000) < 1e-3);
  CHECK(s.zeta(1000) < s.zeta(1000000));
}

TEST_CASE("polynomial schedules are strictly decreasing") {
  for (double e : {0.3, 0.75, 1.0, 1.6}) {
    const auto s = make_polynomial(e);
    for (std::uint64_t k = 0; k < 1000; ++k) CHECK(s(k + 1) < s(k));
  }
}
