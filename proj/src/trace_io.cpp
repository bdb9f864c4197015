#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string_view>

#include "crawlrate/error.hpp"
#include "crawlrate/point_process.hpp"

namespace crawlrate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool read_digits(std::string_view& s, std::size_t count, int& out) {
  if (s.size() < count) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  s.remove_prefix(count);
  return true;
}

bool consume(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

// YYYY-MM-DD[(T| )hh:mm[:ss[.fff]]][Z|(+|-)hh[:]mm] -> seconds since the Unix epoch.
std::optional<double> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int year = 0, month = 0, day = 0;
  if (!read_digits(s, 4, year) || !consume(s, '-') || !read_digits(s, 2, month) || !consume(s, '-') ||
      !read_digits(s, 2, day)) {
    return std::nullopt;
  }
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  double seconds = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0;
  if (s.empty()) return seconds;

  if (!consume(s, 'T') && !consume(s, ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_digits(s, 2, hh) || !consume(s, ':') || !read_digits(s, 2, mm)) return std::nullopt;
  double fraction = 0.0;
  if (consume(s, ':')) {
    if (!read_digits(s, 2, ss)) return std::nullopt;
    if (!s.empty() && (s.front() == '.' || s.front() == ',')) {
      std::size_t n = 1;
      while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
      if (n == 1) return std::nullopt;
      std::string digits = "0." + std::string(s.substr(1, n - 1));
      fraction = *parse_number(digits);
      s.remove_prefix(n);
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  seconds += hh * 3600.0 + mm * 60.0 + ss + fraction;

  if (s.empty() || consume(s, 'Z')) return s.empty() ? std::optional<double>(seconds) : std::nullopt;
  const char sign = s.front();
  if (sign != '+' && sign != '-') return std::nullopt;
  s.remove_prefix(1);
  int oh = 0, om = 0;
  if (!read_digits(s, 2, oh)) return std::nullopt;
  consume(s, ':');
  if (!s.empty() && !read_digits(s, 2, om)) return std::nullopt;
  if (!s.empty()) return std::nullopt;
  const double offset = oh * 3600.0 + om * 60.0;
  return sign == '+' ? seconds - offset : seconds + offset;
}

}  // namespace

TraceFormat parse_trace_format(const std::string& name) {
  if (name == "timestamps-v1") return TraceFormat::TimestampsV1;
  throw InvalidArgument("unknown trace format '" + name + "'");
}

IngestResult parse_trace(std::istream& in, TraceFormat /*format*/) {
  IngestResult result;
  std::vector<double> values;
  std::optional<bool> iso;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;

    std::optional<double> value = parse_number(view);
    bool is_iso = false;
    if (!value) {
      value = parse_iso8601(view);
      is_iso = value.has_value();
    }
    if (!value) throw ParseError(line_no, "not a number or ISO-8601 datetime: '" + std::string(view) + "'");
    if (iso && *iso != is_iso) throw ParseError(line_no, "mixes numeric and ISO-8601 timestamps");
    iso = is_iso;
    if (!is_iso && *value < 0.0) throw ParseError(line_no, "negative timestamp");
    values.push_back(*value);
  }

  result.raw_count = values.size();
  result.iso_input = iso.value_or(false);
  if (values.empty()) {
    result.warnings.push_back("trace is empty");
    return result;
  }

  result.was_unsorted = !std::is_sorted(values.begin(), values.end());
  if (result.was_unsorted) {
    std::sort(values.begin(), values.end());
    result.warnings.push_back("input was not sorted; timestamps were sorted");
  }
  const auto last = std::unique(values.begin(), values.end());
  result.duplicates_dropped = static_cast<std::size_t>(values.end() - last);
  values.erase(last, values.end());
  if (result.duplicates_dropped > 0) {
    result.warnings.push_back(std::to_string(result.duplicates_dropped) + " duplicate timestamp(s) dropped");
  }

  if (result.iso_input) {
    const double origin = values.front();
    for (double& v : values) v -= origin;
  }
  const double horizon = values.back();
  result.trace = ChangeTrace(std::move(values), horizon);
  return result;
}

IngestResult ingest_trace(const std::filesystem::path& path, TraceFormat format) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open trace file " + path.string());
  return parse_trace(in, format);
}

void write_trace(std::ostream& out, const ChangeTrace& trace) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (double t : trace.events()) out << t << '\n';
  out.precision(old_precision);
}

}  // namespace crawlrate
