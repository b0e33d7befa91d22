#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "adex/policy.hpp"
#include "adex/simulate.hpp"

namespace adex {

struct BenchRow {
  PolicyKind policy;
  double min_s = 0.0;
  double mean_s = 0.0;
  double median_s = 0.0;
  double max_s = 0.0;
  int repetitions = 0;
};

struct BenchConfig {
  Scenario scenario;       // workload environment; defaults to the low_cvr preset
  std::uint64_t seed = 20240817;
  int repetitions = 50;
  EmConfig em{};
  int mc_samples = 10000;
  GridConfig grid{};
  std::vector<PolicyKind> policies{PolicyKind::random, PolicyKind::naive_ts, PolicyKind::d_ts,
                                   PolicyKind::d_ucb, PolicyKind::full_bayes};
};

inline BenchConfig default_bench_config() {
  BenchConfig cfg;
  cfg.scenario = preset_by_name("low_cvr");
  return cfg;
}

// Times one full assignment update from raw statistics: snapshot
// construction, estimation, posterior update, and plan computation. The
// workload is the terminal state of one simulated run under the random
// policy, identical for every timed policy; each repetition starts from the
// cold-start priors.
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  RunConfig workload;
  workload.scenario = cfg.scenario;
  workload.policy = PolicyKind::random;
  workload.seed = cfg.seed;
  workload.regret_mode = RegretMode::expectation;

  // Rebuild the terminal statistics by replaying the environment once.
  validate_scenario(workload.scenario);
  const Scenario& sc = workload.scenario;
  auto env_rng = make_rng(derive_seed(workload.seed, stream::environment));
  std::vector<GroupStats> stats;
  for (int g = 0; g < sc.K; ++g) stats.emplace_back(g, sc.step_duration);
  struct Due {
    long reveal;
    int group;
    long step;
    double delay;
  };
  std::vector<Due> due;
  for (long t = 1; t <= sc.horizon; ++t) {
    for (long c = 0; c < sc.clicks_per_step; ++c) {
      const double u = uniform01(env_rng);
      const int g = static_cast<int>(u * sc.K) % sc.K;
      const ClickLatent lat = draw_click_latent(env_rng);
      const ClickOutcome out = outcome_for(sc, g, lat);
      stats[static_cast<std::size_t>(g)].record_clicks(t, 1);
      if (out.converted) {
        const long reveal =
            ExperimentClock::step_of(static_cast<double>(t) * sc.step_duration + out.delay,
                                     sc.step_duration);
        if (reveal <= sc.horizon)
          due.push_back(Due{std::max(reveal, t), g, t, out.delay});
      }
    }
  }
  std::stable_sort(due.begin(), due.end(), [](const Due& a, const Due& b) { return a.reveal < b.reveal; });
  for (const Due& d : due) stats[static_cast<std::size_t>(d.group)].record_conversion(d.step, d.delay);

  std::vector<BenchRow> table;
  for (PolicyKind kind : cfg.policies) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(cfg.repetitions));
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      PolicyEngine engine(PolicyConfig{kind, cfg.em, cfg.mc_samples, cfg.grid, 0.0}, sc.K,
                          derive_seed(cfg.seed, stream::policy));
      std::vector<ObservationSnapshot> snaps;
      snaps.reserve(static_cast<std::size_t>(sc.K));
      for (int g = 0; g < sc.K; ++g)
        snaps.push_back(stats[static_cast<std::size_t>(g)].snapshot_at(sc.horizon));
      const AssignmentPlan plan = engine.update(snaps, sc.horizon);
      validate_plan(plan);
      const auto stop = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::sort(times.begin(), times.end());
    BenchRow row;
    row.policy = kind;
    row.repetitions = cfg.repetitions;
    row.min_s = times.front();
    row.max_s = times.back();
    double sum = 0.0;
    for (double v : times) sum += v;
    row.mean_s = sum / static_cast<double>(times.size());
    const std::size_t mid = times.size() / 2;
    row.median_s = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    table.push_back(row);
  }
  return table;
}

}  // namespace adex
