#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "adex/rng.hpp"

namespace adex {

// Ground-truth delay laws for the simulated environments. Sampling goes
// through quantile transforms of explicit uniforms so that counterfactual
// evaluation can reuse one click's random numbers across groups.
struct ExponentialLaw {
  double rate = 1.0;
};

struct WeibullLaw {
  double shape = 1.0;
  double scale = 1.0;
};

// Two-component exponential mixture with a fast mode and a long tail,
// parameterized by its overall mean: 60% of conversions draw from mean/4,
// the rest from 2.125*mean, which keeps the mixture mean exact.
struct EmpiricalMixLaw {
  double mean_delay = 1.0;

  static constexpr double fast_weight = 0.6;
  static constexpr double fast_mean_factor = 0.25;
  static constexpr double slow_mean_factor = 2.125;
};

using DelayLaw = std::variant<ExponentialLaw, WeibullLaw, EmpiricalMixLaw>;

// Quantile transform; u_mix selects the mixture component where applicable.
inline double delay_quantile(const DelayLaw& law, double u, double u_mix) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ExponentialLaw>) {
          return -std::log1p(-u) / l.rate;
        } else if constexpr (std::is_same_v<T, WeibullLaw>) {
          return l.scale * std::pow(-std::log1p(-u), 1.0 / l.shape);
        } else {
          const double mean = (u_mix < EmpiricalMixLaw::fast_weight)
                                  ? l.mean_delay * EmpiricalMixLaw::fast_mean_factor
                                  : l.mean_delay * EmpiricalMixLaw::slow_mean_factor;
          return -mean * std::log1p(-u);
        }
      },
      law);
}

inline double delay_cdf(const DelayLaw& law, double e) {
  if (e <= 0.0) return 0.0;
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ExponentialLaw>) {
          return -std::expm1(-l.rate * e);
        } else if constexpr (std::is_same_v<T, WeibullLaw>) {
          return -std::expm1(-std::pow(e / l.scale, l.shape));
        } else {
          const double fast = -std::expm1(-e / (l.mean_delay * EmpiricalMixLaw::fast_mean_factor));
          const double slow = -std::expm1(-e / (l.mean_delay * EmpiricalMixLaw::slow_mean_factor));
          return EmpiricalMixLaw::fast_weight * fast +
                 (1.0 - EmpiricalMixLaw::fast_weight) * slow;
        }
      },
      law);
}

inline double sample_delay(const DelayLaw& law, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  const double u_mix = uniform01(rng);
  return delay_quantile(law, u, u_mix);
}

inline std::string to_string(const DelayLaw& law) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ExponentialLaw>) {
          return "exponential(rate=" + std::to_string(l.rate) + ")";
        } else if constexpr (std::is_same_v<T, WeibullLaw>) {
          return "weibull(shape=" + std::to_string(l.shape) + ",scale=" + std::to_string(l.scale) + ")";
        } else {
          return "empirical-mix(mean=" + std::to_string(l.mean_delay) + ")";
        }
      },
      law);
}

// A ground-truth environment: eventual CVRs and delay laws per group plus the
// batch geometry of the experiment.
struct Scenario {
  std::string name;
  int K = 0;
  std::vector<double> theta_true;
  std::vector<DelayLaw> delay;
  long clicks_per_step = 100;
  long horizon = 2000;
  double step_duration = 1.0;
};

inline void validate_scenario(const Scenario& s) {
  if (s.K < 2) throw std::invalid_argument("scenario needs K >= 2 groups");
  if (s.theta_true.size() != static_cast<std::size_t>(s.K) ||
      s.delay.size() != static_cast<std::size_t>(s.K))
    throw std::invalid_argument("theta_true/delay must have K entries");
  for (double th : s.theta_true)
    if (!(th > 0.0) || th >= 1.0) throw std::invalid_argument("theta_true must lie in (0, 1)");
  if (s.clicks_per_step < 1 || s.horizon < 1 || !(s.step_duration > 0.0))
    throw std::invalid_argument("scenario geometry invalid");
}

// The four benchmark environments. Time is measured in abstract units of one
// step; the criteo-like preset reads one unit as 30 minutes, i.e. 48 units
// per day, and surrogates the conversion-log delays with the exponential
// mixture matched to the reported mean delays.
inline std::vector<Scenario> scenario_presets() {
  constexpr double units_per_day = 48.0;
  std::vector<Scenario> presets;
  presets.push_back(Scenario{
      "high_cvr",
      3,
      {0.5, 0.4, 0.3},
      {ExponentialLaw{1.0 / 1000.0}, ExponentialLaw{1.0 / 750.0}, ExponentialLaw{1.0 / 500.0}},
      100,
      2000,
      1.0});
  presets.push_back(Scenario{
      "low_cvr",
      3,
      {0.1, 0.05, 0.03},
      {ExponentialLaw{1.0 / 1000.0}, ExponentialLaw{1.0 / 750.0}, ExponentialLaw{1.0 / 500.0}},
      100,
      2000,
      1.0});
  presets.push_back(Scenario{
      "weibull",
      3,
      {0.1, 0.05, 0.03},
      {WeibullLaw{1.5, 1000.0}, WeibullLaw{1.5, 750.0}, WeibullLaw{1.5, 500.0}},
      100,
      2000,
      1.0});
  presets.push_back(Scenario{
      "criteo_like",
      3,
      {0.225, 0.18, 0.135},
      {EmpiricalMixLaw{7.4 * units_per_day}, EmpiricalMixLaw{5.6 * units_per_day},
       EmpiricalMixLaw{3.7 * units_per_day}},
      100,
      2000,
      1.0});
  return presets;
}

inline Scenario preset_by_name(const std::string& name) {
  for (auto& s : scenario_presets())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace adex
