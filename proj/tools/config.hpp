#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crawlrate/allocator.hpp"
#include "crawlrate/estimators.hpp"
#include "crawlrate/harness.hpp"

namespace crawlrate::cli {

// Any problem with a config document; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceSpec {
  std::string name = "trace";
  double rate = 1.0;
  double horizon = 1.0;
  std::uint64_t seed = 0;
};

struct PageGroup {
  std::size_t count;
  double delta;
  double weight;
};

struct Scenario {
  std::string name = "scenario";
  double budget = 1.0;
  std::vector<PageGroup> groups;
  std::size_t rounds = 40;
  std::size_t steps_per_round = 50;
  std::uint64_t seed = 0;
  bool oracle = false;
  ClampRange estimate_clamp{1e-6, 1e6};
  std::vector<EstimatorConfig> estimators;

  PageModel model() const;
};

nlohmann::json load_json(const std::filesystem::path& path);

/// "experiment" (default) or "trace".
std::string config_kind(const nlohmann::json& doc);

EstimatorConfig parse_estimator(const nlohmann::json& doc);
std::vector<EstimatorConfig> parse_estimators(const nlohmann::json& array);
ExperimentConfig parse_experiment(const nlohmann::json& doc);
TraceSpec parse_trace_spec(const nlohmann::json& doc);
Scenario parse_scenario(const nlohmann::json& doc);

nlohmann::json to_json(const EstimatorConfig& config);

}  // namespace crawlrate::cli
