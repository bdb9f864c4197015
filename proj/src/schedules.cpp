#include "crawlrate/schedules.hpp"

#include <charconv>
#include <cmath>

#include "crawlrate/error.hpp"

namespace crawlrate {

namespace {

constexpr double kExponentTol = 1e-12;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

double parse_double(std::string_view s, std::string_view whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InvalidArgument("bad number in schedule '" + std::string(whole) + "'");
  }
  return v;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive");
}

}  // namespace

StepsizeSchedule StepsizeSchedule::polynomial(double exponent) {
  require_positive(exponent, "polynomial exponent");
  return {ScheduleForm::Polynomial, exponent, 1.0};
}

StepsizeSchedule StepsizeSchedule::power(double exponent, double scale) {
  require_positive(exponent, "power exponent");
  require_positive(scale, "power scale");
  return {ScheduleForm::Power, exponent, scale};
}

StepsizeSchedule StepsizeSchedule::constant(double value) {
  require_positive(value, "constant stepsize");
  return {ScheduleForm::Constant, 0.0, value};
}

StepsizeSchedule StepsizeSchedule::log() { return {ScheduleForm::Log, 0.0, 1.0}; }

StepsizeSchedule StepsizeSchedule::sqrt() { return {ScheduleForm::Sqrt, 0.5, 1.0}; }

StepsizeSchedule StepsizeSchedule::custom(std::function<double(std::uint64_t)> fn, std::string label) {
  if (!fn) throw InvalidArgument("custom schedule needs a callable");
  StepsizeSchedule s{ScheduleForm::Custom, 0.0, 1.0};
  s.custom_ = std::move(fn);
  s.label_ = std::move(label);
  return s;
}

double StepsizeSchedule::operator()(std::uint64_t k) const {
  const double kd = static_cast<double>(k);
  switch (form_) {
    case ScheduleForm::Polynomial:
      return std::pow(kd + 1.0, -exponent_);
    case ScheduleForm::Power:
      return scale_ * std::pow(std::max(kd, 1.0), exponent_);
    case ScheduleForm::Constant:
      return scale_;
    case ScheduleForm::Log:
      return std::log(kd + 2.0);
    case ScheduleForm::Sqrt:
      return std::sqrt(std::max(kd, 1.0));
    case ScheduleForm::Custom: {
      const double v = custom_(k);
      if (!(v > 0.0)) throw InvalidArgument("custom schedule '" + label_ + "' produced a non-positive value");
      return v;
    }
  }
  return 0.0;
}

std::string StepsizeSchedule::to_string() const {
  switch (form_) {
    case ScheduleForm::Polynomial:
      return "poly:" + format_double(exponent_);
    case ScheduleForm::Power:
      return scale_ == 1.0 ? "pow:" + format_double(exponent_)
                           : "pow:" + format_double(exponent_) + ":" + format_double(scale_);
    case ScheduleForm::Constant:
      return "const:" + format_double(scale_);
    case ScheduleForm::Log:
      return "log";
    case ScheduleForm::Sqrt:
      return "sqrt";
    case ScheduleForm::Custom:
      return "custom:" + label_;
  }
  return {};
}

StepsizeSchedule parse_schedule(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "log" && rest.empty()) return StepsizeSchedule::log();
  if (head == "sqrt" && rest.empty()) return StepsizeSchedule::sqrt();
  if (head == "poly" && !rest.empty()) return StepsizeSchedule::polynomial(parse_double(rest, text));
  if (head == "const" && !rest.empty()) return StepsizeSchedule::constant(parse_double(rest, text));
  if (head == "pow" && !rest.empty()) {
    const auto second = rest.find(':');
    if (second == std::string_view::npos) return StepsizeSchedule::power(parse_double(rest, text));
    return StepsizeSchedule::power(parse_double(rest.substr(0, second), text),
                                   parse_double(rest.substr(second + 1), text));
  }
  throw InvalidArgument("unrecognised schedule '" + std::string(text) + "'");
}

StepsizeSchedule make_polynomial(double exponent) { return StepsizeSchedule::polynomial(exponent); }

std::string_view to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "valid";
    case Validity::Invalid: return "invalid";
    case Validity::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(SamRegime r) {
  switch (r) {
    case SamRegime::OneTimescale: return "ONE_TIMESCALE";
    case SamRegime::TwoTimescale: return "TWO_TIMESCALE";
    case SamRegime::Conjecture: return "CONJECTURE";
    case SamRegime::Experimental: return "EXPERIMENTAL";
    case SamRegime::Invalid: return "INVALID";
    case SamRegime::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

SamSchedule::SamSchedule(StepsizeSchedule beta, StepsizeSchedule eta, double omega)
    : beta_(std::move(beta)), eta_(std::move(eta)), omega_(omega) {
  require_positive(omega_, "omega");
}

double SamSchedule::zeta(std::uint64_t k) const {
  const double beta_prev = beta_(k == 0 ? 0 : k - 1);
  return (beta_(k) - omega_ * eta_(k)) / beta_prev;
}

double SamSchedule::gamma(std::uint64_t k) const { return eta_(k) / beta_(k); }

SamRegime SamSchedule::regime() const { return validate_sam(*this).regime; }

LlnVerdict validate_lln(const StepsizeSchedule& alpha) {
  LlnVerdict v;
  // Growth exponent g with alpha_k ~ k^g; every analytic form here is at most
  // polynomial, so log(k / alpha_k) / k -> 0 always holds.
  double growth = 0.0;
  switch (alpha.form()) {
    case ScheduleForm::Custom:
      v.reasons.emplace_back("custom schedule: limits cannot be decided from samples");
      return v;
    case ScheduleForm::Polynomial:
      growth = -alpha.exponent();
      break;
    case ScheduleForm::Power:
      growth = alpha.exponent();
      break;
    case ScheduleForm::Sqrt:
      growth = 0.5;
      break;
    case ScheduleForm::Constant:
    case ScheduleForm::Log:
      growth = 0.0;  // log k grows slower than any power
      break;
  }
  v.rate_guaranteed = Validity::Valid;
  v.reasons.emplace_back("log(k/alpha_k)/k -> 0 for polynomially bounded alpha_k");
  if (growth < 1.0) {
    v.convergent = Validity::Valid;
    v.rate_exponent = std::min(0.5, 1.0 - growth);
    v.reasons.emplace_back(growth > 0.5 ? "alpha_k/k -> 0; alpha_k/k dominates the k^-1/2 term"
                                        : "alpha_k/k -> 0; k^-1/2 term dominates");
  } else {
    v.convergent = Validity::Invalid;
    v.rate_guaranteed = Validity::Invalid;
    v.reasons.emplace_back("alpha_k/k does not vanish (growth exponent >= 1)");
  }
  return v;
}

SaVerdict validate_sa(const StepsizeSchedule& eta) {
  SaVerdict v;
  switch (eta.form()) {
    case ScheduleForm::Custom:
      v.reasons.emplace_back("custom schedule: summability cannot be decided from samples");
      return v;
    case ScheduleForm::Polynomial: {
      const double e = eta.exponent();
      const bool divergent = e <= 1.0 + kExponentTol;
      const bool square_summable = 2.0 * e > 1.0 + kExponentTol;
      if (!divergent) v.reasons.emplace_back("sum eta_k < inf (p-series with exponent > 1)");
      if (!square_summable) v.reasons.emplace_back("sum eta_k^2 = inf (p-series with exponent 2e <= 1)");
      v.convergent = divergent && square_summable ? Validity::Valid : Validity::Invalid;
      if (e > 0.0 && e < 1.0) v.rate_exponent = e / 2.0;
      return v;
    }
    case ScheduleForm::Constant:
      v.convergent = Validity::Invalid;
      v.reasons.emplace_back("constant stepsize: sum eta_k^2 = inf");
      return v;
    case ScheduleForm::Power:
    case ScheduleForm::Log:
    case ScheduleForm::Sqrt:
      v.convergent = Validity::Invalid;
      v.reasons.emplace_back("non-vanishing stepsize: sum eta_k^2 = inf");
      return v;
  }
  return v;
}

SamVerdict validate_sam(const SamSchedule& schedule) {
  SamVerdict v;
  if (schedule.beta().form() != ScheduleForm::Polynomial || schedule.eta().form() != ScheduleForm::Polynomial) {
    v.reason = "regime classification needs polynomial beta_k and eta_k";
    return v;
  }
  const double b = schedule.beta().exponent();
  const double e = schedule.eta().exponent();
  const double omega = schedule.omega();

  if (std::abs(e - b) <= kExponentTol) {
    // zeta_k -> 1 - omega; convergence for a constant momentum limit is open.
    v.regime = SamRegime::Experimental;
    v.zeta_limit = 1.0 - omega;
    v.reason = "eta = beta gives gamma_k = 1; constant momentum limit is not covered";
    return v;
  }
  if (e > b) v.zeta_limit = 1.0;

  if (b > 0.5 && b <= 1.0 + kExponentTol) {
    if (std::abs(e - 2.0 * b) <= kExponentTol) {
      v.regime = SamRegime::OneTimescale;
      v.reason = "beta in (1/2, 1] and eta = 2 beta";
    } else if (e > b + 0.5 + kExponentTol && e < 2.0 * b - kExponentTol) {
      v.regime = SamRegime::TwoTimescale;
      v.reason = "beta in (1/2, 1] and beta + 1/2 < eta < 2 beta";
    } else {
      v.regime = SamRegime::Invalid;
      v.reason = "beta in (1/2, 1] but eta outside (beta + 1/2, 2 beta]";
    }
  } else if (b > 0.0 && b <= 0.5) {
    if (e > b && e <= 2.0 * b + kExponentTol) {
      v.regime = SamRegime::Conjecture;
      v.reason = "beta in (0, 1/2] and beta < eta <= 2 beta (unproven)";
    } else {
      v.regime = SamRegime::Invalid;
      v.reason = "beta in (0, 1/2] but eta outside (beta, 2 beta]";
    }
  } else {
    v.regime = SamRegime::Invalid;
    v.reason = "beta exponent outside (0, 1]";
  }
  if (v.regime == SamRegime::OneTimescale || v.regime == SamRegime::TwoTimescale) {
    v.conjectured_rate_exponent = b / 2.0;
  }
  return v;
}

}  // namespace crawlrate
