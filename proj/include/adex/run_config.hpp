#pragma once

#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "adex/errors.hpp"
#include "adex/simulate.hpp"

namespace adex {

// Full experiment configuration as read from a config document.
struct RunConfigFile {
  RunConfig run;
  int runs = 50;
  std::string output_dir = "out";
};

namespace cfg_detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("invalid value for \"") + key + "\"");
  }
}

inline DelayLaw parse_delay(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("delay entry needs a \"type\"");
  const std::string type = j.at("type").get<std::string>();
  if (type == "exponential") {
    reject_unknown(j, {"type", "rate"}, "delay");
    const double rate = get_or<double>(j, "rate", 0.0);
    if (!(rate > 0.0)) throw ConfigError("exponential delay needs rate > 0");
    return ExponentialLaw{rate};
  }
  if (type == "weibull") {
    reject_unknown(j, {"type", "shape", "scale"}, "delay");
    const double shape = get_or<double>(j, "shape", 0.0);
    const double scale = get_or<double>(j, "scale", 0.0);
    if (!(shape > 0.0) || !(scale > 0.0)) throw ConfigError("weibull delay needs shape, scale > 0");
    return WeibullLaw{shape, scale};
  }
  if (type == "empirical-mix") {
    reject_unknown(j, {"type", "mean_delay"}, "delay");
    const double mean = get_or<double>(j, "mean_delay", 0.0);
    if (!(mean > 0.0)) throw ConfigError("empirical-mix delay needs mean_delay > 0");
    return EmpiricalMixLaw{mean};
  }
  throw ConfigError("unknown delay type \"" + type + "\"");
}

inline Scenario parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("\"scenario\" must be an object");
  reject_unknown(j,
                 {"preset", "name", "K", "theta_true", "delay", "clicks_per_step", "horizon",
                  "step_duration"},
                 "scenario");
  Scenario sc;
  if (j.contains("preset")) {
    sc = preset_by_name(j.at("preset").get<std::string>());
  } else {
    if (!j.contains("K") || !j.contains("theta_true") || !j.contains("delay"))
      throw ConfigError("scenario needs either \"preset\" or K/theta_true/delay");
    sc.K = j.at("K").get<int>();
    sc.theta_true = j.at("theta_true").get<std::vector<double>>();
    for (const auto& d : j.at("delay")) sc.delay.push_back(parse_delay(d));
    sc.name = get_or<std::string>(j, "name", "custom");
  }
  if (j.contains("name")) sc.name = j.at("name").get<std::string>();
  sc.clicks_per_step = get_or<long>(j, "clicks_per_step", sc.clicks_per_step);
  sc.horizon = get_or<long>(j, "horizon", sc.horizon);
  sc.step_duration = get_or<double>(j, "step_duration", sc.step_duration);
  validate_scenario(sc);
  return sc;
}

}  // namespace cfg_detail

// Parses the versioned config document. Unknown keys are rejected; absent
// optional keys take the documented defaults.
inline RunConfigFile parse_run_config(const nlohmann::json& j) {
  using cfg_detail::get_or;
  using cfg_detail::reject_unknown;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "scenario", "policy", "seed", "runs", "em", "mc_samples",
                  "grid", "stopping", "regret_mode", "exploration_floor", "record_events",
                  "output_dir"},
                 "config");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != 1)
    throw ConfigError("config requires \"schema_version\": 1");
  if (!j.contains("scenario")) throw ConfigError("config requires a \"scenario\"");

  RunConfigFile file;
  file.run.scenario = cfg_detail::parse_scenario(j.at("scenario"));
  file.run.policy = policy_from_string(get_or<std::string>(j, "policy", "d-ts"));
  file.run.seed = get_or<std::uint64_t>(j, "seed", 1);
  file.runs = get_or<int>(j, "runs", 50);
  if (file.runs < 1) throw ConfigError("\"runs\" must be >= 1");

  if (j.contains("em")) {
    const auto& em = j.at("em");
    reject_unknown(em, {"max_cycles", "rel_tol", "theta_update_mode"}, "em");
    file.run.em.max_cycles = get_or<int>(em, "max_cycles", file.run.em.max_cycles);
    file.run.em.rel_tol = get_or<double>(em, "rel_tol", file.run.em.rel_tol);
    const std::string mode = get_or<std::string>(em, "theta_update_mode", "delay_corrected");
    if (mode == "delay_corrected")
      file.run.em.theta_update_mode = ThetaUpdateMode::delay_corrected;
    else if (mode == "pure_em")
      file.run.em.theta_update_mode = ThetaUpdateMode::pure_em;
    else
      throw ConfigError("theta_update_mode must be delay_corrected or pure_em");
    if (file.run.em.max_cycles < 1 || file.run.em.rel_tol < 0.0)
      throw ConfigError("em config out of range");
  }

  file.run.mc_samples = get_or<int>(j, "mc_samples", file.run.mc_samples);
  if (file.run.mc_samples < 1) throw ConfigError("\"mc_samples\" must be >= 1");

  if (j.contains("grid")) {
    const auto& grid = j.at("grid");
    reject_unknown(grid, {"theta_points", "lambda_points", "lambda_min", "lambda_max"}, "grid");
    file.run.grid.theta_points = get_or<int>(grid, "theta_points", file.run.grid.theta_points);
    file.run.grid.lambda_points = get_or<int>(grid, "lambda_points", file.run.grid.lambda_points);
    file.run.grid.lambda_min = get_or<double>(grid, "lambda_min", file.run.grid.lambda_min);
    file.run.grid.lambda_max = get_or<double>(grid, "lambda_max", file.run.grid.lambda_max);
  }

  if (j.contains("stopping")) {
    const auto& stop = j.at("stopping");
    reject_unknown(stop, {"prob_threshold", "dwell_steps"}, "stopping");
    StoppingRule rule;
    rule.prob_threshold = get_or<double>(stop, "prob_threshold", rule.prob_threshold);
    rule.dwell_steps = get_or<long>(stop, "dwell_steps", rule.dwell_steps);
    if (!(rule.prob_threshold > 0.0) || !(rule.prob_threshold < 1.0) || rule.dwell_steps < 1)
      throw ConfigError("stopping rule out of range");
    file.run.stopping = rule;
  }

  const std::string regret = get_or<std::string>(j, "regret_mode", "realized");
  if (regret == "realized")
    file.run.regret_mode = RegretMode::realized_crn;
  else if (regret == "expectation")
    file.run.regret_mode = RegretMode::expectation;
  else
    throw ConfigError("regret_mode must be realized or expectation");

  file.run.exploration_floor = get_or<double>(j, "exploration_floor", 0.0);
  file.run.record_events = get_or<bool>(j, "record_events", false);
  file.output_dir = get_or<std::string>(j, "output_dir", file.output_dir);
  return file;
}

inline RunConfigFile parse_run_config_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  return parse_run_config(j);
}

inline nlohmann::json delay_to_json(const DelayLaw& law) {
  return std::visit(
      [](const auto& l) -> nlohmann::json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ExponentialLaw>)
          return {{"type", "exponential"}, {"rate", l.rate}};
        else if constexpr (std::is_same_v<T, WeibullLaw>)
          return {{"type", "weibull"}, {"shape", l.shape}, {"scale", l.scale}};
        else
          return {{"type", "empirical-mix"}, {"mean_delay", l.mean_delay}};
      },
      law);
}

// Serializes the resolved configuration; parsing it back yields the same run.
inline nlohmann::json run_config_to_json(const RunConfigFile& file) {
  const RunConfig& run = file.run;
  nlohmann::json scenario{{"name", run.scenario.name},
                          {"K", run.scenario.K},
                          {"theta_true", run.scenario.theta_true},
                          {"clicks_per_step", run.scenario.clicks_per_step},
                          {"horizon", run.scenario.horizon},
                          {"step_duration", run.scenario.step_duration}};
  nlohmann::json delays = nlohmann::json::array();
  for (const auto& d : run.scenario.delay) delays.push_back(delay_to_json(d));
  scenario["delay"] = delays;

  nlohmann::json j{{"schema_version", 1},
                   {"scenario", scenario},
                   {"policy", to_string(run.policy)},
                   {"seed", run.seed},
                   {"runs", file.runs},
                   {"em",
                    {{"max_cycles", run.em.max_cycles},
                     {"rel_tol", run.em.rel_tol},
                     {"theta_update_mode",
                      run.em.theta_update_mode == ThetaUpdateMode::delay_corrected
                          ? "delay_corrected"
                          : "pure_em"}}},
                   {"mc_samples", run.mc_samples},
                   {"regret_mode",
                    run.regret_mode == RegretMode::realized_crn ? "realized" : "expectation"},
                   {"exploration_floor", run.exploration_floor},
                   {"record_events", run.record_events},
                   {"output_dir", file.output_dir}};
  if (run.policy == PolicyKind::full_bayes)
    j["grid"] = {{"theta_points", run.grid.theta_points},
                 {"lambda_points", run.grid.lambda_points},
                 {"lambda_min", run.grid.lambda_min},
                 {"lambda_max", run.grid.lambda_max}};
  if (run.stopping)
    j["stopping"] = {{"prob_threshold", run.stopping->prob_threshold},
                     {"dwell_steps", run.stopping->dwell_steps}};
  return j;
}

}  // namespace adex
