#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crawlrate/point_process.hpp"
#include "crawlrate/schedules.hpp"

namespace crawlrate {

// Online estimator state after k indicators. `iterate` holds x_k (LLN), y_k (SA),
// z_k (SAM) or q_k (Naive); `previous` holds z_{k-1} for SAM.
template <typename Scalar>
struct EstimatorState {
  std::uint64_t k = 0;
  std::uint64_t running_sum = 0;  // sum of indicators seen so far
  Scalar iterate = Scalar(0);
  Scalar previous = Scalar(0);

  friend bool operator==(const EstimatorState&, const EstimatorState&) = default;
};

// x_k = p * S_k / (k + alpha_k - S_k). alpha_k > 0 and S_k <= k keep the
// denominator positive, so the estimate stays finite even on all-ones streams.
template <typename Scalar>
EstimatorState<Scalar> lln_step(EstimatorState<Scalar> s, bool indicator, Scalar alpha_k, Scalar rate_p) {
  ++s.k;
  s.running_sum += indicator ? 1u : 0u;
  const auto sum = static_cast<Scalar>(s.running_sum);
  s.iterate = rate_p * sum / (static_cast<Scalar>(s.k) + alpha_k - sum);
  return s;
}

// y_{k+1} = y_k + eta_k [I_{k+1} (y_k + p) - y_k]
template <typename Scalar>
EstimatorState<Scalar> sa_step(EstimatorState<Scalar> s, bool indicator, Scalar eta_k, Scalar rate_p) {
  const Scalar y = s.iterate;
  const Scalar drive = indicator ? y + rate_p : Scalar(0);
  s.previous = y;
  s.iterate = y + eta_k * (drive - y);
  ++s.k;
  s.running_sum += indicator ? 1u : 0u;
  return s;
}

// z_{k+1} = z_k + eta_k [I_{k+1} (z_k + p) - z_k] + zeta_k (z_k - z_{k-1})
template <typename Scalar>
EstimatorState<Scalar> sam_step(EstimatorState<Scalar> s, bool indicator, Scalar eta_k, Scalar zeta_k,
                                Scalar rate_p) {
  const Scalar z = s.iterate;
  const Scalar drive = indicator ? z + rate_p : Scalar(0);
  // Same evaluation order as sa_step, so zeta_k = 0 reproduces SA bit for bit.
  const Scalar sa_part = z + eta_k * (drive - z);
  s.iterate = sa_part + zeta_k * (z - s.previous);
  s.previous = z;
  ++s.k;
  s.running_sum += indicator ? 1u : 0u;
  return s;
}

// q_k = p * S_k / k; converges to p*delta/(delta + p), not delta.
template <typename Scalar>
EstimatorState<Scalar> naive_step(EstimatorState<Scalar> s, bool indicator, Scalar rate_p) {
  ++s.k;
  s.running_sum += indicator ? 1u : 0u;
  s.iterate = rate_p * static_cast<Scalar>(s.running_sum) / static_cast<Scalar>(s.k);
  return s;
}

/// Mean-field drift of the SA recursion, h(y) = E[I (y + p) - y] = p (delta - y) / (delta + p).
template <typename Scalar>
Scalar mean_field_h(Scalar y, Scalar rate_p, Scalar delta) {
  return rate_p * (delta - y) / (delta + rate_p);
}

// ---- offline root-finding estimators ----

struct ClampRange {
  double lo;
  double hi;
};

/// [1e-6, 1e6] * p.
ClampRange default_clamp(double rate_p);

enum class SolveStatus { Converged, ClampedHigh, NoSolutionClampedLow };

std::string_view to_string(SolveStatus s);

struct SolveReport {
  double estimate;
  SolveStatus status;
  int iterations;
  double residual;
};

/// MLE residual: sum I_j tau_j / (e^{delta tau_j} - 1) - sum (1 - I_j) tau_j.
/// Strictly decreasing in delta whenever some I_j = 1.
double mle_residual(std::span<const Observation> obs, double delta);
/// MM residual: sum e^{-delta tau_j} - sum (1 - I_j). Strictly decreasing in delta.
double mm_residual(std::span<const Observation> obs, double delta);

/// Bisection (on log delta) for the MLE equation inside `clamp`. All-zero
/// streams report NoSolutionClampedLow at clamp.lo; all-one streams report
/// ClampedHigh at clamp.hi.
SolveReport mle_solve(std::span<const Observation> obs, ClampRange clamp, double tol = 1e-10);
SolveReport mle_solve(const IndicatorStream& stream, ClampRange clamp, double tol = 1e-10);
/// Same contract for the moment-matching equation.
SolveReport mm_solve(std::span<const Observation> obs, ClampRange clamp, double tol = 1e-10);
SolveReport mm_solve(const IndicatorStream& stream, ClampRange clamp, double tol = 1e-10);

// ---- runtime-configured estimator ----

enum class EstimatorKind { Lln, Sa, Sam, Naive, Mle, Mm };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);
bool is_online(EstimatorKind kind);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Lln;
  std::string label;  // defaults to the kind name
  StepsizeSchedule alpha = StepsizeSchedule::constant(1.0);  // LLN
  StepsizeSchedule eta = StepsizeSchedule::polynomial(0.75);  // SA, SAM
  StepsizeSchedule beta = StepsizeSchedule::polynomial(0.75);  // SAM
  double omega = 1.0;                                          // SAM
  double initial_y = 0.0;                                      // SA
  double initial_z = 0.0;                                      // SAM
  std::optional<double> initial_z_prev;                        // SAM; defaults to initial_z
  std::optional<ClampRange> clamp;                             // MLE/MM; defaults to default_clamp(p)
  double tol = 1e-10;                                          // MLE/MM residual tolerance
  std::uint64_t resolve_every = 50;                            // MLE/MM re-solve cadence in replications

  std::string display_label() const;
  static EstimatorConfig lln(StepsizeSchedule alpha = StepsizeSchedule::constant(1.0));
  static EstimatorConfig sa(StepsizeSchedule eta = StepsizeSchedule::polynomial(0.75));
  static EstimatorConfig sam(StepsizeSchedule beta, StepsizeSchedule eta, double omega = 1.0);
  static EstimatorConfig naive();
  static EstimatorConfig mle(std::uint64_t resolve_every = 50);
  static EstimatorConfig mm(std::uint64_t resolve_every = 50);
};

// Feeds one observation at a time to the configured estimator. The access
// rate is passed per observation because adaptive crawling changes it.
// Online kinds ignore tau; MLE/MM keep the full history and re-solve lazily.
class RateEstimator {
 public:
  explicit RateEstimator(EstimatorConfig config);

  void observe(const Observation& obs, double rate_p);
  /// nullopt until an estimate exists (k = 0 for LLN, Naive, MLE, MM).
  std::optional<double> estimate();

  const EstimatorConfig& config() const noexcept { return config_; }
  const EstimatorState<double>& state() const noexcept { return state_; }
  std::uint64_t steps() const noexcept { return state_.k; }
  /// Last MLE/MM solver report, if a solve has happened.
  const std::optional<SolveReport>& last_report() const noexcept { return report_; }

 private:
  EstimatorConfig config_;
  EstimatorState<double> state_;
  double last_rate_p_ = 1.0;
  std::vector<Observation> history_;
  std::optional<SolveReport> report_;
  bool dirty_ = false;
  SamSchedule sam_;
};

}  // namespace crawlrate
