#include "crawlrate/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crawlrate/error.hpp"

namespace crawlrate {

namespace {

constexpr int kMaxBisections = 400;

// tau / (e^{delta tau} - 1); near delta tau = 0 the series limit avoids cancellation.
double mle_term(double delta, double tau) {
  const double x = delta * tau;
  if (x < 1e-8) return (1.0 - 0.5 * x) / delta;
  return tau / std::expm1(x);
}

void validate_solver_inputs(std::span<const Observation> obs, ClampRange clamp, double tol) {
  if (obs.empty()) throw InvalidArgument("solver needs a non-empty indicator stream");
  if (!(tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (!(clamp.lo > 0.0) || !(clamp.hi > clamp.lo) || !std::isfinite(clamp.hi)) {
    throw InvalidArgument("clamp range needs 0 < lo < hi < inf");
  }
}

// Bisection on log(delta) for a residual that is strictly decreasing in delta.
template <typename Residual>
SolveReport bisect_decreasing(Residual&& f, ClampRange clamp, double tol) {
  const double f_lo = f(clamp.lo);
  if (std::abs(f_lo) <= tol) return {clamp.lo, SolveStatus::Converged, 0, f_lo};
  if (f_lo < 0.0) return {clamp.lo, SolveStatus::NoSolutionClampedLow, 0, f_lo};
  const double f_hi = f(clamp.hi);
  if (std::abs(f_hi) <= tol) return {clamp.hi, SolveStatus::Converged, 0, f_hi};
  if (f_hi > 0.0) return {clamp.hi, SolveStatus::ClampedHigh, 0, f_hi};

  double lo = clamp.lo, hi = clamp.hi;
  double mid = lo, f_mid = f_lo;
  int it = 0;
  while (it < kMaxBisections) {
    ++it;
    mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    if (std::abs(f_mid) <= tol) break;
    if (f_mid > 0.0) lo = mid; else hi = mid;
    // Root bracketed to within a few ulps: no closer representable answer exists.
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return {mid, SolveStatus::Converged, it, f_mid};
}

}  // namespace

ClampRange default_clamp(double rate_p) { return {1e-6 * rate_p, 1e6 * rate_p}; }

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "CONVERGED";
    case SolveStatus::ClampedHigh: return "CLAMPED_HIGH";
    case SolveStatus::NoSolutionClampedLow: return "NO_SOLUTION_CLAMPED_LOW";
  }
  return "UNKNOWN";
}

double mle_residual(std::span<const Observation> obs, double delta) {
  double lhs = 0.0, rhs = 0.0;
  for (const auto& o : obs) {
    if (o.changed) lhs += mle_term(delta, o.tau);
    else rhs += o.tau;
  }
  return lhs - rhs;
}

double mm_residual(std::span<const Observation> obs, double delta) {
  double lhs = 0.0;
  double unchanged = 0.0;
  for (const auto& o : obs) {
    lhs += std::exp(-delta * o.tau);
    if (!o.changed) unchanged += 1.0;
  }
  return lhs - unchanged;
}

SolveReport mle_solve(std::span<const Observation> obs, ClampRange clamp, double tol) {
  validate_solver_inputs(obs, clamp, tol);
  const auto ones = std::count_if(obs.begin(), obs.end(), [](const Observation& o) { return o.changed; });
  // No detected change: the left side is identically 0 < right side.
  if (ones == 0) return {clamp.lo, SolveStatus::NoSolutionClampedLow, 0, mle_residual(obs, clamp.lo)};
  // Every access saw a change: the root is at infinity.
  if (ones == static_cast<std::ptrdiff_t>(obs.size())) {
    return {clamp.hi, SolveStatus::ClampedHigh, 0, mle_residual(obs, clamp.hi)};
  }
  return bisect_decreasing([obs](double d) { return mle_residual(obs, d); }, clamp, tol);
}

SolveReport mle_solve(const IndicatorStream& stream, ClampRange clamp, double tol) {
  return mle_solve(stream.observations(), clamp, tol);
}

SolveReport mm_solve(std::span<const Observation> obs, ClampRange clamp, double tol) {
  validate_solver_inputs(obs, clamp, tol);
  const auto ones = std::count_if(obs.begin(), obs.end(), [](const Observation& o) { return o.changed; });
  // All zeros: the root is delta = 0, below any admissible clamp.lo.
  if (ones == 0) return {clamp.lo, SolveStatus::NoSolutionClampedLow, 0, mm_residual(obs, clamp.lo)};
  if (ones == static_cast<std::ptrdiff_t>(obs.size())) {
    return {clamp.hi, SolveStatus::ClampedHigh, 0, mm_residual(obs, clamp.hi)};
  }
  return bisect_decreasing([obs](double d) { return mm_residual(obs, d); }, clamp, tol);
}

SolveReport mm_solve(const IndicatorStream& stream, ClampRange clamp, double tol) {
  return mm_solve(stream.observations(), clamp, tol);
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Lln: return "lln";
    case EstimatorKind::Sa: return "sa";
    case EstimatorKind::Sam: return "sam";
    case EstimatorKind::Naive: return "naive";
    case EstimatorKind::Mle: return "mle";
    case EstimatorKind::Mm: return "mm";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto kind : {EstimatorKind::Lln, EstimatorKind::Sa, EstimatorKind::Sam, EstimatorKind::Naive,
                    EstimatorKind::Mle, EstimatorKind::Mm}) {
    if (lower == to_string(kind)) return kind;
  }
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

bool is_online(EstimatorKind kind) { return kind != EstimatorKind::Mle && kind != EstimatorKind::Mm; }

std::string EstimatorConfig::display_label() const {
  return label.empty() ? std::string(to_string(kind)) : label;
}

EstimatorConfig EstimatorConfig::lln(StepsizeSchedule alpha) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Lln;
  c.alpha = std::move(alpha);
  return c;
}

EstimatorConfig EstimatorConfig::sa(StepsizeSchedule eta) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Sa;
  c.eta = std::move(eta);
  return c;
}

EstimatorConfig EstimatorConfig::sam(StepsizeSchedule beta, StepsizeSchedule eta, double omega) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Sam;
  c.beta = std::move(beta);
  c.eta = std::move(eta);
  c.omega = omega;
  return c;
}

EstimatorConfig EstimatorConfig::naive() {
  EstimatorConfig c;
  c.kind = EstimatorKind::Naive;
  return c;
}

EstimatorConfig EstimatorConfig::mle(std::uint64_t resolve_every) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Mle;
  c.resolve_every = resolve_every;
  return c;
}

EstimatorConfig EstimatorConfig::mm(std::uint64_t resolve_every) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Mm;
  c.resolve_every = resolve_every;
  return c;
}

RateEstimator::RateEstimator(EstimatorConfig config)
    : config_(std::move(config)), sam_(config_.beta, config_.eta, config_.omega) {
  if (config_.resolve_every == 0) throw InvalidArgument("resolve_every must be >= 1");
  if (config_.clamp && (!(config_.clamp->lo > 0.0) || !(config_.clamp->hi > config_.clamp->lo))) {
    throw InvalidArgument("clamp range needs 0 < lo < hi");
  }
  switch (config_.kind) {
    case EstimatorKind::Sa:
      state_.iterate = state_.previous = config_.initial_y;
      break;
    case EstimatorKind::Sam:
      state_.iterate = config_.initial_z;
      state_.previous = config_.initial_z_prev.value_or(config_.initial_z);
      break;
    default:
      break;
  }
}

void RateEstimator::observe(const Observation& obs, double rate_p) {
  if (!(rate_p > 0.0)) throw InvalidArgument("access rate must be positive");
  last_rate_p_ = rate_p;
  const std::uint64_t k = state_.k;
  switch (config_.kind) {
    case EstimatorKind::Lln:
      state_ = lln_step(state_, obs.changed, config_.alpha(k + 1), rate_p);
      break;
    case EstimatorKind::Sa:
      state_ = sa_step(state_, obs.changed, config_.eta(k), rate_p);
      break;
    case EstimatorKind::Sam:
      state_ = sam_step(state_, obs.changed, config_.eta(k), sam_.zeta(k), rate_p);
      break;
    case EstimatorKind::Naive:
      state_ = naive_step(state_, obs.changed, rate_p);
      break;
    case EstimatorKind::Mle:
    case EstimatorKind::Mm:
      history_.push_back(obs);
      ++state_.k;
      state_.running_sum += obs.changed ? 1u : 0u;
      dirty_ = true;
      break;
  }
}

std::optional<double> RateEstimator::estimate() {
  switch (config_.kind) {
    case EstimatorKind::Sa:
    case EstimatorKind::Sam:
      return state_.iterate;
    case EstimatorKind::Lln:
    case EstimatorKind::Naive:
      if (state_.k == 0) return std::nullopt;
      return state_.iterate;
    case EstimatorKind::Mle:
    case EstimatorKind::Mm:
      if (state_.k == 0) return std::nullopt;
      if (dirty_) {
        const ClampRange clamp = config_.clamp.value_or(default_clamp(last_rate_p_));
        report_ = config_.kind == EstimatorKind::Mle ? mle_solve(history_, clamp, config_.tol)
                                                     : mm_solve(history_, clamp, config_.tol);
        state_.iterate = report_->estimate;
        dirty_ = false;
      }
      return report_->estimate;
  }
  return std::nullopt;
}

}  // namespace crawlrate
