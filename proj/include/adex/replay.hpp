#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "adex/bandit.hpp"
#include "adex/em.hpp"
#include "adex/event_log.hpp"
#include "adex/group_stats.hpp"

namespace adex {

// Per-step, per-group estimate row produced by replaying a log.
struct EstimateRow {
  long step = 0;
  int group = 0;
  double theta_star = 0.0;
  double lambda_star = 0.0;
  double naive_cvr = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double p = 0.0;  // plan computed from this step's estimates
};

struct EstimateSeries {
  std::vector<EstimateRow> rows;  // step-major, n_groups per step
  int n_groups = 0;
};

struct ReplayConfig {
  double step_duration = 1.0;
  EmConfig em{};
  int mc_samples = 10000;
  std::uint64_t seed = 1;  // master seed; the plan stream derives from it
};

// Replays an event log through the estimator, stepping the clock from the
// first batch to the last event. Events are bucketed by step (clicks by
// their timestamp, conversions by their reveal step) and applied in file
// order within a bucket, which reproduces a simulator export bit-exactly.
inline EstimateSeries replay_estimates(const EventLog& log, const ReplayConfig& config) {
  EstimateSeries series;
  series.n_groups = std::max(log.n_groups, 2);
  if (log.events.empty()) return series;

  struct Slot {
    std::size_t index;
    bool is_click;
  };
  long first_step = 0, last_step = 0;
  bool any = false;
  std::map<long, std::vector<Slot>> by_step;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    long s;
    bool is_click;
    if (const auto* c = std::get_if<ClickEvent>(&log.events[i])) {
      s = ExperimentClock::step_of(c->ts, config.step_duration);
      is_click = true;
    } else {
      s = ExperimentClock::step_of(std::get<ConversionEvent>(log.events[i]).ts,
                                   config.step_duration);
      is_click = false;
    }
    by_step[s].push_back(Slot{i, is_click});
    first_step = any ? std::min(first_step, s) : s;
    last_step = any ? std::max(last_step, s) : s;
    any = true;
  }

  const int k = series.n_groups;
  std::vector<GroupStats> stats;
  for (int g = 0; g < k; ++g) stats.emplace_back(g, config.step_duration);
  std::vector<GroupEstimate> estimates(static_cast<std::size_t>(k), initial_estimate());
  const std::uint64_t policy_seed = derive_seed(config.seed, stream::policy);

  for (long t = first_step; t <= last_step; ++t) {
    ExperimentClock clock{t, config.step_duration};
    auto it = by_step.find(t);
    if (it != by_step.end()) {
      // clicks first, then conversions, each in file order
      for (const Slot& slot : it->second)
        if (slot.is_click)
          stats[static_cast<std::size_t>(log.event_group[slot.index])].ingest_click(
              std::get<ClickEvent>(log.events[slot.index]), clock);
      for (const Slot& slot : it->second)
        if (!slot.is_click)
          stats[static_cast<std::size_t>(log.event_group[slot.index])].ingest_conversion(
              std::get<ConversionEvent>(log.events[slot.index]));
    }

    std::vector<BetaPosterior> post(static_cast<std::size_t>(k));
    std::vector<EstimateRow> rows(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) {
      const ObservationSnapshot snap = stats[static_cast<std::size_t>(g)].snapshot_at(t);
      estimates[static_cast<std::size_t>(g)] =
          run_em(snap, estimates[static_cast<std::size_t>(g)], config.em);
      post[static_cast<std::size_t>(g)] =
          update_beta_dts(snap.n_convert, estimates[static_cast<std::size_t>(g)].theta);
      EstimateRow& row = rows[static_cast<std::size_t>(g)];
      row.step = t;
      row.group = g;
      row.theta_star = estimates[static_cast<std::size_t>(g)].theta;
      row.lambda_star = estimates[static_cast<std::size_t>(g)].lambda;
      row.naive_cvr = snap.n_total > 0
                          ? static_cast<double>(snap.n_convert) / static_cast<double>(snap.n_total)
                          : 0.0;
      row.alpha = post[static_cast<std::size_t>(g)].alpha;
      row.beta = post[static_cast<std::size_t>(g)].beta;
    }
    const AssignmentPlan plan = assignment_probs_mc(
        post, config.mc_samples, derive_seed(policy_seed, static_cast<std::uint64_t>(t)), t);
    for (int g = 0; g < k; ++g) rows[static_cast<std::size_t>(g)].p = plan.probs[static_cast<std::size_t>(g)];
    for (auto& row : rows) series.rows.push_back(row);
  }
  return series;
}

// Matured CVR over a trailing attribution window: among clicks at least
// `window` old at `at_time`, the share with a conversion within the window.
inline double matured_cvr(const EventLog& log, double window, double at_time) {
  std::unordered_map<std::string, double> click_ts;
  long clicks = 0, conversions = 0;
  for (const auto& ev : log.events)
    if (const auto* c = std::get_if<ClickEvent>(&ev))
      if (c->ts <= at_time - window) {
        click_ts.emplace(c->click_id, c->ts);
        ++clicks;
      }
  for (const auto& ev : log.events)
    if (const auto* v = std::get_if<ConversionEvent>(&ev)) {
      auto it = click_ts.find(v->click_id);
      if (it != click_ts.end() && v->ts - it->second <= window) ++conversions;
    }
  return clicks > 0 ? static_cast<double>(conversions) / static_cast<double>(clicks) : 0.0;
}

}  // namespace adex
