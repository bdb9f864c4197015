#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crawlrate {

// Analytic shape of a deterministic sequence k -> value, k >= 0.
//   Polynomial(e):  (k + 1)^(-e)              decaying stepsizes, e > 0
//   Power(a, c):    c * max(k, 1)^a            growing offsets such as alpha_k = k^0.75
//   Constant(c):    c
//   Log:            ln(k + 2)
//   Sqrt:           sqrt(max(k, 1))
//   Custom:         user callable; never validated
enum class ScheduleForm { Polynomial, Power, Constant, Log, Sqrt, Custom };

class StepsizeSchedule {
 public:
  static StepsizeSchedule polynomial(double exponent);
  static StepsizeSchedule power(double exponent, double scale = 1.0);
  static StepsizeSchedule constant(double value);
  static StepsizeSchedule log();
  static StepsizeSchedule sqrt();
  static StepsizeSchedule custom(std::function<double(std::uint64_t)> fn, std::string label = "custom");

  double operator()(std::uint64_t k) const;

  ScheduleForm form() const noexcept { return form_; }
  /// Decay exponent for Polynomial, growth exponent for Power.
  double exponent() const noexcept { return exponent_; }
  /// Constant value, or the Power scale.
  double scale() const noexcept { return scale_; }
  /// Round-trips through parse_schedule for every non-custom form.
  std::string to_string() const;

 private:
  StepsizeSchedule(ScheduleForm form, double exponent, double scale)
      : form_(form), exponent_(exponent), scale_(scale) {}

  ScheduleForm form_;
  double exponent_ = 0.0;
  double scale_ = 1.0;
  std::function<double(std::uint64_t)> custom_;
  std::string label_;
};

/// "poly:0.75", "pow:0.75", "pow:1:2", "const:1", "log", "sqrt".
StepsizeSchedule parse_schedule(std::string_view text);

StepsizeSchedule make_polynomial(double exponent);

enum class Validity { Valid, Invalid, Unknown };

std::string_view to_string(Validity v);

struct LlnVerdict {
  Validity convergent = Validity::Unknown;      // alpha_k / k -> 0
  Validity rate_guaranteed = Validity::Unknown;  // log(k / alpha_k) / k -> 0
  /// E|x_k - delta| = O(k^-r) with r = min(1/2, 1 - growth exponent of alpha_k).
  std::optional<double> rate_exponent;
  std::vector<std::string> reasons;
};

struct SaVerdict {
  Validity convergent = Validity::Unknown;  // sum eta = inf, sum eta^2 < inf
  /// eta/2 for polynomial exponents in (0, 1).
  std::optional<double> rate_exponent;
  std::vector<std::string> reasons;
};

enum class SamRegime { OneTimescale, TwoTimescale, Conjecture, Experimental, Invalid, Unknown };

std::string_view to_string(SamRegime r);

/// Momentum stepsizes: zeta_k = (beta_k - omega * eta_k) / beta_{k-1}, with beta_{-1} := beta_0.
class SamSchedule {
 public:
  SamSchedule(StepsizeSchedule beta, StepsizeSchedule eta, double omega = 1.0);

  const StepsizeSchedule& beta() const noexcept { return beta_; }
  const StepsizeSchedule& eta() const noexcept { return eta_; }
  double omega() const noexcept { return omega_; }

  double zeta(std::uint64_t k) const;
  /// gamma_k = eta_k / beta_k.
  double gamma(std::uint64_t k) const;
  SamRegime regime() const;

 private:
  StepsizeSchedule beta_;
  StepsizeSchedule eta_;
  double omega_;
};

struct SamVerdict {
  SamRegime regime = SamRegime::Unknown;
  /// lim zeta_k when it is known from the analytic form.
  std::optional<double> zeta_limit;
  /// Conjectured O~(k^{-beta/2}) rate; informational only.
  std::optional<double> conjectured_rate_exponent;
  std::string reason;
};

LlnVerdict validate_lln(const StepsizeSchedule& alpha);
SaVerdict validate_sa(const StepsizeSchedule& eta);
SamVerdict validate_sam(const SamSchedule& schedule);

}  // namespace crawlrate
