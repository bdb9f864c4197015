#include "config.hpp"

#include <fstream>

#include "crawlrate/error.hpp"

namespace crawlrate::cli {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return get_or<T>(doc, key, T{});
}

StepsizeSchedule schedule_or(const json& doc, const char* key, const StepsizeSchedule& fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return parse_schedule(doc.at(key).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::optional<ClampRange> clamp_from(const json& doc, const char* key) {
  if (!doc.contains(key)) return std::nullopt;
  const auto values = get_or<std::vector<double>>(doc, key, {});
  if (values.size() != 2 || !(values[0] > 0.0) || !(values[1] > values[0])) {
    throw ConfigError(std::string("field '") + key + "' must be [lo, hi] with 0 < lo < hi");
  }
  return ClampRange{values[0], values[1]};
}

}  // namespace

PageModel Scenario::model() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.count;
  Eigen::VectorXd delta(static_cast<Eigen::Index>(n)), weights(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (const auto& g : groups) {
    for (std::size_t c = 0; c < g.count; ++c, ++i) {
      delta(i) = g.delta;
      weights(i) = g.weight;
    }
  }
  return PageModel(std::move(delta), std::move(weights));
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

std::string config_kind(const json& doc) { return get_or<std::string>(doc, "kind", "experiment"); }

EstimatorConfig parse_estimator(const json& doc) {
  if (!doc.is_object()) throw ConfigError("estimator entry must be an object");
  EstimatorConfig c;
  try {
    c.kind = parse_estimator_kind(require<std::string>(doc, "kind"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  c.label = get_or<std::string>(doc, "label", "");
  c.alpha = schedule_or(doc, "alpha", c.alpha);
  c.eta = schedule_or(doc, "eta", c.eta);
  c.beta = schedule_or(doc, "beta", c.beta);
  c.omega = get_or<double>(doc, "omega", c.omega);
  if (!(c.omega > 0.0)) throw ConfigError("omega must be positive");
  c.initial_y = get_or<double>(doc, "initial_y", c.initial_y);
  c.initial_z = get_or<double>(doc, "initial_z", c.initial_z);
  if (doc.contains("initial_z_prev")) c.initial_z_prev = get_or<double>(doc, "initial_z_prev", 0.0);
  c.clamp = clamp_from(doc, "clamp");
  c.tol = get_or<double>(doc, "tol", c.tol);
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  c.resolve_every = get_or<std::uint64_t>(doc, "resolve_every", c.resolve_every);
  if (c.resolve_every < 1) throw ConfigError("resolve_every must be >= 1");
  return c;
}

std::vector<EstimatorConfig> parse_estimators(const json& array) {
  if (!array.is_array()) throw ConfigError("'estimators' must be an array");
  std::vector<EstimatorConfig> out;
  for (const auto& entry : array) out.push_back(parse_estimator(entry));
  return out;
}

ExperimentConfig parse_experiment(const json& doc) {
  ExperimentConfig c;
  c.name = get_or<std::string>(doc, "name", c.name);
  c.delta = require<double>(doc, "delta");
  c.rate_p = require<double>(doc, "rate_p");
  c.n_steps = require<std::size_t>(doc, "n_steps");
  c.n_runs = require<std::size_t>(doc, "n_runs");
  c.master_seed = get_or<std::uint64_t>(doc, "master_seed", 0);
  if (!doc.contains("estimators")) throw ConfigError("missing field 'estimators'");
  c.estimators = parse_estimators(doc.at("estimators"));
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

TraceSpec parse_trace_spec(const json& doc) {
  TraceSpec t;
  t.name = get_or<std::string>(doc, "name", t.name);
  t.rate = require<double>(doc, "rate");
  t.horizon = require<double>(doc, "horizon");
  t.seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (!(t.rate > 0.0) || !(t.horizon > 0.0)) throw ConfigError("trace rate and horizon must be positive");
  return t;
}

Scenario parse_scenario(const json& doc) {
  Scenario s;
  s.name = get_or<std::string>(doc, "name", s.name);
  s.budget = require<double>(doc, "budget");
  if (!(s.budget > 0.0)) throw ConfigError("budget must be positive");
  if (!doc.contains("groups") || !doc.at("groups").is_array() || doc.at("groups").empty()) {
    throw ConfigError("scenario needs a non-empty 'groups' array");
  }
  for (const auto& g : doc.at("groups")) {
    PageGroup group{require<std::size_t>(g, "count"), require<double>(g, "delta"), get_or<double>(g, "weight", 1.0)};
    if (group.count < 1 || !(group.delta > 0.0) || !(group.weight > 0.0)) {
      throw ConfigError("each group needs count >= 1, delta > 0 and weight > 0");
    }
    s.groups.push_back(group);
  }
  s.rounds = get_or<std::size_t>(doc, "rounds", s.rounds);
  s.steps_per_round = get_or<std::size_t>(doc, "steps_per_round", s.steps_per_round);
  if (s.rounds < 1 || s.steps_per_round < 1) throw ConfigError("rounds and steps_per_round must be >= 1");
  s.seed = get_or<std::uint64_t>(doc, "seed", 0);
  s.oracle = get_or<bool>(doc, "oracle", false);
  if (auto clamp = clamp_from(doc, "estimate_clamp")) s.estimate_clamp = *clamp;
  if (doc.contains("estimators")) s.estimators = parse_estimators(doc.at("estimators"));
  if (doc.contains("estimator")) s.estimators.push_back(parse_estimator(doc.at("estimator")));
  return s;
}

json to_json(const EstimatorConfig& c) {
  json j{{"kind", to_string(c.kind)}, {"label", c.display_label()}};
  switch (c.kind) {
    case EstimatorKind::Lln:
      j["alpha"] = c.alpha.to_string();
      break;
    case EstimatorKind::Sa:
      j["eta"] = c.eta.to_string();
      j["initial_y"] = c.initial_y;
      break;
    case EstimatorKind::Sam:
      j["eta"] = c.eta.to_string();
      j["beta"] = c.beta.to_string();
      j["omega"] = c.omega;
      j["initial_z"] = c.initial_z;
      j["initial_z_prev"] = c.initial_z_prev.value_or(c.initial_z);
      j["regime"] = to_string(validate_sam(SamSchedule(c.beta, c.eta, c.omega)).regime);
      break;
    case EstimatorKind::Mle:
    case EstimatorKind::Mm:
      j["resolve_every"] = c.resolve_every;
      j["tol"] = c.tol;
      if (c.clamp) j["clamp"] = {c.clamp->lo, c.clamp->hi};
      break;
    case EstimatorKind::Naive:
      break;
  }
  return j;
}

}  // namespace crawlrate::cli
