#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crawlrate/rng.hpp"

namespace crawlrate {

/// Change timestamps of one page over the observation window [0, horizon].
class ChangeTrace {
 public:
  ChangeTrace() = default;
  /// Throws InvalidArgument unless events are strictly increasing and inside [0, horizon].
  ChangeTrace(std::vector<double> events, double horizon);

  std::span<const double> events() const noexcept { return events_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  /// Gaps between consecutive events (size() - 1 entries).
  std::vector<double> gaps() const;

 private:
  std::vector<double> events_;
  double horizon_ = 0.0;
};

/// Crawl instants t_0 = 0 < t_1 < ... drawn at rate p.
class AccessSchedule {
 public:
  AccessSchedule(std::vector<double> times, double rate_p);

  std::span<const double> times() const noexcept { return times_; }
  double rate_p() const noexcept { return rate_p_; }
  std::size_t gap_count() const noexcept { return times_.size() - 1; }

 private:
  std::vector<double> times_;
  double rate_p_;
};

/// One crawl outcome: the gap since the previous access and whether the page
/// changed inside (t_{k-1}, t_k].
struct Observation {
  double tau;
  bool changed;

  friend bool operator==(const Observation&, const Observation&) = default;
};

class IndicatorStream {
 public:
  IndicatorStream() = default;
  IndicatorStream(std::vector<Observation> observations, double rate_p);

  std::span<const Observation> observations() const noexcept { return observations_; }
  double rate_p() const noexcept { return rate_p_; }
  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }
  std::size_t change_count() const noexcept;

 private:
  std::vector<Observation> observations_;
  double rate_p_ = 1.0;
};

struct QQPoint {
  double empirical;
  double theoretical;
};

struct QQData {
  std::vector<QQPoint> points;
  double reference_rate;
};

/// Goodness-of-fit summary of a Q-Q point cloud: least-squares line of the
/// empirical quantiles on the theoretical ones.
struct QQFit {
  double correlation;  // 0 when either coordinate is constant
  double slope;
  double intercept;
};

struct ChangeRateSummary {
  double rate;      // (count - 1) / (last - first)
  double mean_gap;  // (last - first) / (count - 1)
  std::size_t count;
  double span;
};

ChangeTrace sample_poisson_process(double rate, double horizon, std::uint64_t seed);
AccessSchedule sample_access_schedule(double rate_p, std::size_t n_accesses, std::uint64_t seed);
/// Accesses at rate p over [0, horizon]; the last access is the final one not past the horizon.
AccessSchedule sample_access_schedule_over(double rate_p, double horizon, std::uint64_t seed);

IndicatorStream indicators_from_traces(const ChangeTrace& trace, const AccessSchedule& schedule);

ChangeRateSummary empirical_change_rate(const ChangeTrace& trace);

QQData qq_points(std::span<const double> gaps, double reference_rate);
QQFit qq_fit(const QQData& data);

// Streams (tau, I) pairs without materialising either process. Draw-for-draw
// identical to indicators_from_traces(sample_poisson_process(delta, H, change_seed),
// sample_access_schedule(p, n, access_seed)) while the horizon H covers the accesses.
// The change timeline persists across calls, so the access rate may vary.
class IndicatorSimulator {
 public:
  IndicatorSimulator(double change_rate, std::uint64_t change_seed, std::uint64_t access_seed);
  IndicatorSimulator(double change_rate, std::uint64_t seed)
      : IndicatorSimulator(change_rate, derive_seed(seed, 0), derive_seed(seed, 1)) {}

  Observation next(double rate_p);
  double now() const noexcept { return now_; }
  double change_rate() const noexcept { return change_rate_; }

 private:
  double change_rate_;
  Rng change_rng_;
  Rng access_rng_;
  double now_ = 0.0;
  double next_change_;
};

// ---- timestamps-v1 ingestion ----

enum class TraceFormat { TimestampsV1 };

struct IngestResult {
  ChangeTrace trace;
  std::size_t raw_count = 0;        // parsed timestamps before deduplication
  std::size_t duplicates_dropped = 0;
  bool was_unsorted = false;
  bool iso_input = false;           // timestamps were ISO-8601 and rebased to the first event
  std::vector<std::string> warnings;
};

TraceFormat parse_trace_format(const std::string& name);

/// timestamps-v1: one real number (seconds) or ISO-8601 datetime per line,
/// blank lines and '#' comments ignored. Throws ParseError with a 1-based line number.
IngestResult parse_trace(std::istream& in, TraceFormat format = TraceFormat::TimestampsV1);
IngestResult ingest_trace(const std::filesystem::path& path, TraceFormat format = TraceFormat::TimestampsV1);

/// Writes one timestamp per line with full round-trip precision.
void write_trace(std::ostream& out, const ChangeTrace& trace);

}  // namespace crawlrate
