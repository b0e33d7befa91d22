#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adex/events.hpp"
#include "adex/group_stats.hpp"
#include "adex/policy.hpp"
#include "adex/scenario.hpp"

namespace adex {

// Latent randomness of one click, drawn once and shared across groups so
// counterfactual outcomes use common random numbers.
struct ClickLatent {
  double u_convert = 0.0;
  double u_delay = 0.0;
  double u_mix = 0.0;
};

struct ClickOutcome {
  bool converted = false;
  double delay = 0.0;  // defined only when converted
};

inline ClickLatent draw_click_latent(std::mt19937_64& rng) {
  ClickLatent lat;
  lat.u_convert = uniform01(rng);
  lat.u_delay = uniform01(rng);
  lat.u_mix = uniform01(rng);
  return lat;
}

// Outcome the click would have in the given group. Because u_convert is
// shared, a click that converts under theta_k also converts under any larger
// theta, which keeps counterfactual regret nonnegative.
inline ClickOutcome outcome_for(const Scenario& scenario, int group, const ClickLatent& lat) {
  ClickOutcome out;
  out.converted = lat.u_convert < scenario.theta_true[static_cast<std::size_t>(group)];
  if (out.converted)
    out.delay = delay_quantile(scenario.delay[static_cast<std::size_t>(group)], lat.u_delay,
                               lat.u_mix);
  return out;
}

inline ClickOutcome sample_click_outcome(int group, const Scenario& scenario,
                                         std::mt19937_64& rng) {
  return outcome_for(scenario, group, draw_click_latent(rng));
}

// Eventual conversions per group among one batch's assigned clicks, credited
// at assignment time from the latent flags.
inline std::vector<double> realized_rewards(std::span<const int> assignments,
                                            std::span<const ClickOutcome> outcomes, int k) {
  std::vector<double> rewards(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (outcomes[i].converted) rewards[static_cast<std::size_t>(assignments[i])] += 1.0;
  return rewards;
}

enum class RegretMode {
  realized_crn,  // counterfactuals evaluated with each click's own uniforms
  expectation    // variance-free: theta differences instead of realizations
};

struct StoppingDecision {
  int winner = -1;
  long step = 0;
};

// Per-(step, group) record of a run.
struct StepGroupRecord {
  long assigned = 0;       // clicks routed to the group this step
  long revealed_cum = 0;   // conversions observed by the end of the step
  double realized = 0.0;   // eventual conversions among this step's assignments
  double counterfactual = 0.0;  // eventual conversions had the whole batch gone here
  double p_assign = 0.0;   // plan probability used to assign this step
  double p_next = 0.0;     // plan probability computed from this step's data
  GroupReadout readout;    // estimates after this step's update
};

struct RegretTrace {
  PolicyKind policy = PolicyKind::d_ts;
  std::uint64_t seed = 0;
  int K = 0;
  long steps_run = 0;
  std::vector<StepGroupRecord> records;  // step-major, steps_run * K entries
  std::vector<double> regret_step;
  std::vector<double> regret_cum;
  std::optional<StoppingDecision> winner;

  const StepGroupRecord& at(long step, int group) const {
    return records[static_cast<std::size_t>((step - 1) * K + group)];
  }
};

struct RunConfig {
  Scenario scenario;
  PolicyKind policy = PolicyKind::d_ts;
  std::uint64_t seed = 1;
  EmConfig em{};
  int mc_samples = 10000;
  GridConfig grid{};
  double exploration_floor = 0.0;
  std::optional<StoppingRule> stopping;
  RegretMode regret_mode = RegretMode::realized_crn;
  bool record_events = false;  // keep the click/conversion log in the trace

  // Test hook: when set, this supplies every plan and the policy engine is
  // bypassed (used for oracle / pinned-arm baselines in the test suites).
  std::function<AssignmentPlan(long step, int n_groups)> fixed_plan;
};

// Recomputes the per-step and cumulative regret series from the stored
// rewards: best single-group counterfactual minus realized total.
inline void cumulative_regret(RegretTrace& trace) {
  trace.regret_step.assign(static_cast<std::size_t>(trace.steps_run), 0.0);
  trace.regret_cum.assign(static_cast<std::size_t>(trace.steps_run), 0.0);
  double cum = 0.0;
  for (long t = 1; t <= trace.steps_run; ++t) {
    double best = 0.0;
    double realized = 0.0;
    for (int g = 0; g < trace.K; ++g) {
      const auto& rec = trace.at(t, g);
      best = std::max(best, rec.counterfactual);
      realized += rec.realized;
    }
    const double r = best - realized;
    cum += r;
    trace.regret_step[static_cast<std::size_t>(t - 1)] = r;
    trace.regret_cum[static_cast<std::size_t>(t - 1)] = cum;
  }
}

struct RecordedEvent {
  bool is_click = false;
  std::string click_id;
  int group = 0;
  double ts = 0.0;
};

struct RunResult {
  RegretTrace trace;
  std::vector<RecordedEvent> events;  // populated when record_events is set
};

// Closed-loop batch experiment. Each step: route the batch with the current
// plan, draw latent outcomes, reveal conversions whose time has come, update
// the policy on per-group snapshots, and account regret. Deterministic for a
// fixed config: the environment and the policy consume independent
// substreams of the run seed, and the environment stream advances by exactly
// four uniforms per click regardless of the policy.
inline RunResult run_experiment(const RunConfig& config) {
  validate_scenario(config.scenario);
  const Scenario& sc = config.scenario;
  const int k = sc.K;
  const double dt = sc.step_duration;

  auto env_rng = make_rng(derive_seed(config.seed, stream::environment));
  PolicyEngine engine(
      PolicyConfig{config.policy, config.em, config.mc_samples, config.grid,
                   config.exploration_floor},
      k, derive_seed(config.seed, stream::policy));

  std::vector<GroupStats> stats;
  stats.reserve(static_cast<std::size_t>(k));
  for (int g = 0; g < k; ++g) stats.emplace_back(g, dt);

  struct PendingConversion {
    long reveal_step;
    int group;
    long click_step;
    double delay;
    std::string click_id;
  };
  // Reveal times are nondecreasing in insertion order only per click, so keep
  // a sorted buffer keyed by reveal step.
  std::multimap<long, PendingConversion> pending;

  RunResult result;
  RegretTrace& trace = result.trace;
  trace.policy = config.policy;
  trace.seed = config.seed;
  trace.K = k;
  trace.records.reserve(static_cast<std::size_t>(sc.horizon * k));

  // First batch is routed uniformly; a fixed test plan governs from step 1.
  AssignmentPlan plan;
  plan.step = 0;
  plan.probs.assign(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
  if (config.fixed_plan) plan = config.fixed_plan(1, k);
  std::vector<AssignmentPlan> plan_history;
  if (config.stopping) plan_history.reserve(static_cast<std::size_t>(sc.horizon));
  std::vector<long> revealed_cum(static_cast<std::size_t>(k), 0);

  std::vector<int> assignments(static_cast<std::size_t>(sc.clicks_per_step));
  std::vector<ClickOutcome> outcomes(static_cast<std::size_t>(sc.clicks_per_step));

  for (long t = 1; t <= sc.horizon; ++t) {
    const double now = static_cast<double>(t) * dt;

    // Route and realize the batch. Clicks are collapsed to the batch time.
    std::vector<double> counterfactual(static_cast<std::size_t>(k), 0.0);
    std::vector<long> assigned(static_cast<std::size_t>(k), 0);
    for (long c = 0; c < sc.clicks_per_step; ++c) {
      const double u_assign = uniform01(env_rng);
      int g = k - 1;
      double cumP = 0.0;
      for (int j = 0; j < k; ++j) {
        cumP += plan.probs[static_cast<std::size_t>(j)];
        if (u_assign < cumP) {
          g = j;
          break;
        }
      }
      const ClickLatent lat = draw_click_latent(env_rng);
      const ClickOutcome out = outcome_for(sc, g, lat);
      assignments[static_cast<std::size_t>(c)] = g;
      outcomes[static_cast<std::size_t>(c)] = out;
      ++assigned[static_cast<std::size_t>(g)];

      if (config.regret_mode == RegretMode::realized_crn) {
        for (int j = 0; j < k; ++j)
          if (lat.u_convert < sc.theta_true[static_cast<std::size_t>(j)])
            counterfactual[static_cast<std::size_t>(j)] += 1.0;
      }

      stats[static_cast<std::size_t>(g)].record_clicks(t, 1);
      std::string id;
      if (config.record_events) {
        id = "c" + std::to_string(t) + "-" + std::to_string(c);
        result.events.push_back(RecordedEvent{true, id, g, now});
      }
      if (out.converted) {
        const double conv_ts = now + out.delay;
        const long reveal = ExperimentClock::step_of(conv_ts, dt);
        // store the delay as the log round-trip computes it (conv_ts - click
        // ts), so replaying an exported log reproduces identical statistics
        pending.emplace(std::max(reveal, t), PendingConversion{reveal, g, t, conv_ts - now, id});
      }
    }
    if (config.regret_mode == RegretMode::expectation) {
      const double batch = static_cast<double>(sc.clicks_per_step);
      for (int j = 0; j < k; ++j)
        counterfactual[static_cast<std::size_t>(j)] = batch * sc.theta_true[static_cast<std::size_t>(j)];
    }

    // Reveal conversions due by the end of this step, in reveal order.
    while (!pending.empty() && pending.begin()->first <= t) {
      const PendingConversion pc = pending.begin()->second;
      pending.erase(pending.begin());
      stats[static_cast<std::size_t>(pc.group)].record_conversion(pc.click_step, pc.delay);
      ++revealed_cum[static_cast<std::size_t>(pc.group)];
      if (config.record_events)
        result.events.push_back(RecordedEvent{
            false, pc.click_id, pc.group,
            static_cast<double>(pc.click_step) * dt + pc.delay});
    }

    // Policy update on this step's censored snapshots.
    AssignmentPlan next_plan;
    if (config.fixed_plan) {
      next_plan = config.fixed_plan(t + 1, k);
    } else {
      std::vector<ObservationSnapshot> snaps;
      snaps.reserve(static_cast<std::size_t>(k));
      for (int g = 0; g < k; ++g)
        snaps.push_back(stats[static_cast<std::size_t>(g)].snapshot_at(t));
      next_plan = engine.update(snaps, t);
    }
    validate_plan(next_plan);

    const std::vector<double> realized = realized_rewards(assignments, outcomes, k);

    for (int g = 0; g < k; ++g) {
      StepGroupRecord rec;
      rec.assigned = assigned[static_cast<std::size_t>(g)];
      rec.revealed_cum = revealed_cum[static_cast<std::size_t>(g)];
      rec.counterfactual = counterfactual[static_cast<std::size_t>(g)];
      rec.p_assign = plan.probs[static_cast<std::size_t>(g)];
      rec.p_next = next_plan.probs[static_cast<std::size_t>(g)];
      rec.readout = engine.readouts()[static_cast<std::size_t>(g)];
      if (config.regret_mode == RegretMode::realized_crn) {
        rec.realized = realized[static_cast<std::size_t>(g)];
      } else {
        // expectation mode: credit theta per assigned click
        rec.realized = static_cast<double>(rec.assigned) * sc.theta_true[static_cast<std::size_t>(g)];
      }
      trace.records.push_back(rec);
    }
    trace.steps_run = t;

    plan = next_plan;
    if (config.stopping) {
      plan_history.push_back(std::move(next_plan));
      if (auto w = check_stopping(plan_history, *config.stopping)) {
        trace.winner = StoppingDecision{*w, t};
        break;
      }
    }
  }

  cumulative_regret(trace);
  return result;
}

// Aggregate curves across replications: per-step mean and the 20th/80th
// quantile band of cumulative regret, runs seeded seed + run_index.
struct AggregateCurves {
  long steps = 0;
  std::vector<double> mean;
  std::vector<double> q20;
  std::vector<double> q80;
  std::vector<double> terminal;  // per-run terminal cumulative regret
};

// Linear-interpolation quantile of a sorted sample (type 7).
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

template <class PerRun>
inline AggregateCurves replicate(const RunConfig& config, int n_runs, PerRun&& per_run) {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(n_runs));
  long steps = config.scenario.horizon;
  for (int r = 0; r < n_runs; ++r) {
    RunConfig rc = config;
    rc.seed = config.seed + static_cast<std::uint64_t>(r);
    RunResult res = run_experiment(rc);
    curves[static_cast<std::size_t>(r)] = res.trace.regret_cum;
    per_run(r, res);
  }
  // Stopped runs are shorter; aggregate over the common horizon by carrying
  // the final cumulative value forward.
  AggregateCurves agg;
  agg.steps = steps;
  agg.mean.assign(static_cast<std::size_t>(steps), 0.0);
  agg.q20.assign(static_cast<std::size_t>(steps), 0.0);
  agg.q80.assign(static_cast<std::size_t>(steps), 0.0);
  std::vector<double> column(static_cast<std::size_t>(n_runs));
  for (long t = 0; t < steps; ++t) {
    for (int r = 0; r < n_runs; ++r) {
      const auto& c = curves[static_cast<std::size_t>(r)];
      column[static_cast<std::size_t>(r)] =
          c.empty() ? 0.0 : c[std::min<std::size_t>(static_cast<std::size_t>(t), c.size() - 1)];
    }
    double sum = 0.0;
    for (double v : column) sum += v;
    agg.mean[static_cast<std::size_t>(t)] = sum / static_cast<double>(n_runs);
    std::sort(column.begin(), column.end());
    agg.q20[static_cast<std::size_t>(t)] = sorted_quantile(column, 0.20);
    agg.q80[static_cast<std::size_t>(t)] = sorted_quantile(column, 0.80);
  }
  agg.terminal.reserve(static_cast<std::size_t>(n_runs));
  for (const auto& c : curves) agg.terminal.push_back(c.empty() ? 0.0 : c.back());
  return agg;
}

inline AggregateCurves replicate(const RunConfig& config, int n_runs) {
  return replicate(config, n_runs, [](int, const RunResult&) {});
}

}  // namespace adex
