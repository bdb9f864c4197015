#include "crawlrate/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crawlrate/error.hpp"

namespace crawlrate {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

ChangeTrace::ChangeTrace(std::vector<double> events, double horizon)
    : events_(std::move(events)), horizon_(horizon) {
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) throw InvalidArgument("trace horizon must be finite and >= 0");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const double t = events_[i];
    if (!(t >= 0.0) || t > horizon_) throw InvalidArgument("trace event outside [0, horizon]");
    if (i > 0 && !(t > events_[i - 1])) throw InvalidArgument("trace events must be strictly increasing");
  }
}

std::vector<double> ChangeTrace::gaps() const {
  std::vector<double> out;
  if (events_.size() < 2) return out;
  out.reserve(events_.size() - 1);
  for (std::size_t i = 1; i < events_.size(); ++i) out.push_back(events_[i] - events_[i - 1]);
  return out;
}

AccessSchedule::AccessSchedule(std::vector<double> times, double rate_p)
    : times_(std::move(times)), rate_p_(rate_p) {
  require_positive(rate_p_, "access rate");
  if (times_.empty() || times_.front() != 0.0) throw InvalidArgument("access schedule must start at t0 = 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw InvalidArgument("access times must be strictly increasing");
  }
}

IndicatorStream::IndicatorStream(std::vector<Observation> observations, double rate_p)
    : observations_(std::move(observations)), rate_p_(rate_p) {
  require_positive(rate_p_, "access rate");
  for (const auto& obs : observations_) {
    if (!(obs.tau > 0.0)) throw InvalidArgument("inter-access gap must be positive");
  }
}

std::size_t IndicatorStream::change_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(observations_.begin(), observations_.end(), [](const Observation& o) { return o.changed; }));
}

ChangeTrace sample_poisson_process(double rate, double horizon, std::uint64_t seed) {
  require_positive(rate, "change rate");
  require_positive(horizon, "horizon");
  Rng rng(seed);
  std::vector<double> events;
  events.reserve(static_cast<std::size_t>(std::min(rate * horizon * 1.1 + 16.0, 1e7)));
  for (double t = next_arrival(0.0, rate, rng); t <= horizon; t = next_arrival(t, rate, rng)) {
    events.push_back(t);
  }
  return ChangeTrace(std::move(events), horizon);
}

AccessSchedule sample_access_schedule(double rate_p, std::size_t n_accesses, std::uint64_t seed) {
  require_positive(rate_p, "access rate");
  if (n_accesses < 1) throw InvalidArgument("need at least one access");
  Rng rng(seed);
  std::vector<double> times(n_accesses + 1);
  times[0] = 0.0;
  for (std::size_t k = 1; k <= n_accesses; ++k) times[k] = next_arrival(times[k - 1], rate_p, rng);
  return AccessSchedule(std::move(times), rate_p);
}

AccessSchedule sample_access_schedule_over(double rate_p, double horizon, std::uint64_t seed) {
  require_positive(rate_p, "access rate");
  if (!(horizon >= 0.0)) throw InvalidArgument("horizon must be >= 0");
  Rng rng(seed);
  std::vector<double> times{0.0};
  for (double t = next_arrival(0.0, rate_p, rng); t <= horizon; t = next_arrival(t, rate_p, rng)) {
    times.push_back(t);
  }
  return AccessSchedule(std::move(times), rate_p);
}

IndicatorStream indicators_from_traces(const ChangeTrace& trace, const AccessSchedule& schedule) {
  const auto times = schedule.times();
  if (times.back() > trace.horizon()) throw InvalidArgument("access schedule extends beyond the trace horizon");

  const auto events = trace.events();
  std::vector<Observation> out;
  out.reserve(schedule.gap_count());
  std::size_t next = 0;  // first event not yet attributed to an interval
  // Events at exactly t0 = 0 precede every interval (t_{k-1}, t_k].
  while (next < events.size() && events[next] <= times[0]) ++next;
  for (std::size_t k = 1; k < times.size(); ++k) {
    bool changed = false;
    while (next < events.size() && events[next] <= times[k]) {
      changed = true;
      ++next;
    }
    out.push_back({times[k] - times[k - 1], changed});
  }
  return IndicatorStream(std::move(out), schedule.rate_p());
}

ChangeRateSummary empirical_change_rate(const ChangeTrace& trace) {
  if (trace.size() < 2) throw InsufficientData("change rate needs at least 2 events");
  const auto events = trace.events();
  const double span = events.back() - events.front();
  const auto gaps = static_cast<double>(trace.size() - 1);
  return {gaps / span, span / gaps, trace.size(), span};
}

QQData qq_points(std::span<const double> gaps, double reference_rate) {
  require_positive(reference_rate, "reference rate");
  if (gaps.empty()) throw InvalidArgument("Q-Q needs at least one gap");
  std::vector<double> sorted(gaps.begin(), gaps.end());
  for (double g : sorted) {
    if (!(g > 0.0)) throw InvalidArgument("Q-Q gaps must be positive");
  }
  std::sort(sorted.begin(), sorted.end());

  const auto n = static_cast<double>(sorted.size());
  QQData data{{}, reference_rate};
  data.points.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Hazen plotting position (i - 0.5) / n with 1-based i.
    const double position = (static_cast<double>(i) + 0.5) / n;
    data.points.push_back({sorted[i], -std::log1p(-position) / reference_rate});
  }
  return data;
}

QQFit qq_fit(const QQData& data) {
  const auto n = static_cast<double>(data.points.size());
  if (data.points.size() < 2) throw InsufficientData("Q-Q fit needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : data.points) {
    mx += p.theoretical;
    my += p.empirical;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : data.points) {
    const double dx = p.theoretical - mx;
    const double dy = p.empirical - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double correlation = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  return {correlation, slope, my - slope * mx};
}

IndicatorSimulator::IndicatorSimulator(double change_rate, std::uint64_t change_seed, std::uint64_t access_seed)
    : change_rate_(change_rate), change_rng_(change_seed), access_rng_(access_seed) {
  require_positive(change_rate_, "change rate");
  next_change_ = next_arrival(0.0, change_rate_, change_rng_);
}

Observation IndicatorSimulator::next(double rate_p) {
  if (!(rate_p > 0.0)) throw InvalidArgument("access rate must be positive");
  const double t = next_arrival(now_, rate_p, access_rng_);
  bool changed = false;
  while (next_change_ <= t) {
    changed = true;
    next_change_ = next_arrival(next_change_, change_rate_, change_rng_);
  }
  const double tau = t - now_;
  now_ = t;
  return {tau, changed};
}

}  // namespace crawlrate
