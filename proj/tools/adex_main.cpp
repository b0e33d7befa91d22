// adex - delay-corrected adaptive experimentation CLI.
//
// Subcommands:
//   simulate  run seeded replications of a scenario under one policy and
//             write regret/estimate CSVs plus a reproducibility manifest
//   replay    run the delay-corrected estimator over an event log
//   bench     time one full assignment update per policy on a fixed workload
//   presets   list the built-in scenario presets as JSON
//
// Exit codes: 0 success, 2 config error, 3 input-data error, 4 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adex/bench.hpp"
#include "adex/csv.hpp"
#include "adex/event_log.hpp"
#include "adex/replay.hpp"
#include "adex/run_config.hpp"
#include "adex/simulate.hpp"
#include "adex/version.hpp"

namespace {

namespace fs = std::filesystem;
using adex::csv_double;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_internal = 4;

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string policy;
  std::string out_dir;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<long> batch;
  std::optional<int> mc_samples;
  bool events = false;
};

adex::RunConfigFile load_config(const CommonFlags& flags) {
  adex::RunConfigFile file;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw adex::ConfigError("cannot read config file " + flags.config_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    file = adex::parse_run_config_text(text);
  } else if (!flags.preset.empty()) {
    file.run.scenario = adex::preset_by_name(flags.preset);
  } else {
    throw adex::ConfigError("provide --config or --preset");
  }
  if (!flags.preset.empty() && !flags.config_path.empty())
    file.run.scenario = adex::preset_by_name(flags.preset);
  if (!flags.policy.empty()) file.run.policy = adex::policy_from_string(flags.policy);
  if (flags.runs) {
    if (*flags.runs < 1) throw adex::ConfigError("--runs must be >= 1");
    file.runs = *flags.runs;
  }
  if (flags.seed) file.run.seed = *flags.seed;
  if (flags.steps) {
    if (*flags.steps < 1) throw adex::ConfigError("--steps must be >= 1");
    file.run.scenario.horizon = *flags.steps;
  }
  if (flags.batch) {
    if (*flags.batch < 1) throw adex::ConfigError("--batch must be >= 1");
    file.run.scenario.clicks_per_step = *flags.batch;
  }
  if (flags.mc_samples) {
    if (*flags.mc_samples < 1) throw adex::ConfigError("--mc must be >= 1");
    file.run.mc_samples = *flags.mc_samples;
  }
  if (flags.events) file.run.record_events = true;
  if (!flags.out_dir.empty()) file.output_dir = flags.out_dir;
  adex::validate_scenario(file.run.scenario);
  return file;
}

void write_manifest(const fs::path& dir, const adex::RunConfigFile& file,
                    const std::string& command, const std::vector<std::string>& artifacts) {
  nlohmann::json manifest{{"tool", "adex"},
                          {"version", adex::version},
                          {"command", command},
                          {"config", adex::run_config_to_json(file)},
                          {"artifacts", artifacts}};
  adex::AtomicFileWriter w(dir / "manifest.json");
  w.stream() << manifest.dump(2) << "\n";
  w.commit();
}

int cmd_simulate(const CommonFlags& flags) {
  const adex::RunConfigFile file = load_config(flags);
  const fs::path dir(file.output_dir);
  fs::create_directories(dir);

  adex::AtomicFileWriter trace_csv(dir / "regret_trace.csv");
  trace_csv.stream() << "run,step,policy,group,assigned,revealed_conversions,theta_hat,"
                        "lambda_hat,p_assign,regret_step,regret_cum\n";
  adex::AtomicFileWriter est_csv(dir / "estimates.csv");
  est_csv.stream() << "run,step,group,theta_star,lambda_star,naive_cvr,alpha,beta,p\n";
  std::optional<adex::AtomicFileWriter> events_out;
  if (file.run.record_events) events_out.emplace(dir / "events.log");

  const std::string policy_name = adex::to_string(file.run.policy);
  auto agg = adex::replicate(file.run, file.runs, [&](int run, const adex::RunResult& res) {
    const auto& trace = res.trace;
    for (long t = 1; t <= trace.steps_run; ++t) {
      for (int g = 0; g < trace.K; ++g) {
        const auto& rec = trace.at(t, g);
        trace_csv.stream() << run << ',' << t << ',' << policy_name << ',' << g << ','
                           << rec.assigned << ',' << rec.revealed_cum << ','
                           << csv_double(rec.readout.theta_hat) << ','
                           << csv_double(rec.readout.lambda_hat) << ','
                           << csv_double(rec.p_assign) << ','
                           << csv_double(trace.regret_step[static_cast<std::size_t>(t - 1)]) << ','
                           << csv_double(trace.regret_cum[static_cast<std::size_t>(t - 1)]) << '\n';
        est_csv.stream() << run << ',' << t << ',' << g << ','
                         << csv_double(rec.readout.theta_hat) << ','
                         << csv_double(rec.readout.lambda_hat) << ','
                         << csv_double(rec.readout.naive_cvr) << ','
                         << csv_double(rec.readout.alpha) << ',' << csv_double(rec.readout.beta)
                         << ',' << csv_double(rec.p_next) << '\n';
      }
    }
    if (events_out) {
      for (const auto& ev : res.events) {
        if (ev.is_click)
          adex::write_event(events_out->stream(), adex::ClickEvent{ev.click_id, ev.group, ev.ts});
        else
          adex::write_event(events_out->stream(), adex::ConversionEvent{ev.click_id, ev.ts});
      }
    }
    if (trace.winner)
      std::cout << "run " << run << ": winner group " << trace.winner->winner << " at step "
                << trace.winner->step << "\n";
  });

  adex::AtomicFileWriter curves_csv(dir / "regret_curves.csv");
  curves_csv.stream() << "step,mean,q20,q80\n";
  for (long t = 0; t < agg.steps; ++t)
    curves_csv.stream() << (t + 1) << ',' << csv_double(agg.mean[static_cast<std::size_t>(t)])
                        << ',' << csv_double(agg.q20[static_cast<std::size_t>(t)]) << ','
                        << csv_double(agg.q80[static_cast<std::size_t>(t)]) << '\n';

  trace_csv.commit();
  est_csv.commit();
  curves_csv.commit();
  std::vector<std::string> artifacts{"regret_trace.csv", "estimates.csv", "regret_curves.csv"};
  if (events_out) {
    events_out->commit();
    artifacts.push_back("events.log");
  }
  write_manifest(dir, file, "simulate", artifacts);

  double terminal = 0.0;
  for (double v : agg.terminal) terminal += v;
  std::cout << "simulate: policy=" << policy_name << " scenario=" << file.run.scenario.name
            << " runs=" << file.runs << " mean terminal regret="
            << terminal / static_cast<double>(file.runs) << "\n";
  return exit_ok;
}

int cmd_replay(const std::string& log_path, const CommonFlags& flags, double step_duration) {
  adex::RunConfigFile file;
  bool have_config = false;
  if (!flags.config_path.empty()) {
    file = load_config(flags);
    have_config = true;
  }
  adex::ReplayConfig rc;
  rc.step_duration = step_duration;
  if (have_config) {
    rc.em = file.run.em;
    rc.mc_samples = file.run.mc_samples;
    rc.seed = file.run.seed;
  }
  if (flags.seed) rc.seed = *flags.seed;
  if (flags.mc_samples) rc.mc_samples = *flags.mc_samples;

  std::ifstream in(log_path);
  if (!in) {
    std::cerr << "adex: cannot read log " << log_path << "\n";
    return exit_data;
  }
  const adex::EventLog log = adex::parse_event_log(in);
  const adex::EstimateSeries series = adex::replay_estimates(log, rc);

  const fs::path dir(flags.out_dir.empty() ? "out" : flags.out_dir);
  fs::create_directories(dir);
  adex::AtomicFileWriter csv(dir / "replay_estimates.csv");
  csv.stream() << "step,group,theta_star,lambda_star,naive_cvr,alpha,beta,p\n";
  for (const auto& row : series.rows)
    csv.stream() << row.step << ',' << row.group << ',' << csv_double(row.theta_star) << ','
                 << csv_double(row.lambda_star) << ',' << csv_double(row.naive_cvr) << ','
                 << csv_double(row.alpha) << ',' << csv_double(row.beta) << ','
                 << csv_double(row.p) << '\n';
  csv.commit();
  std::cout << "replay: " << log.size() << " events, " << series.rows.size() << " rows -> "
            << (dir / "replay_estimates.csv").string() << "\n";
  return exit_ok;
}

int cmd_bench(const CommonFlags& flags, int repetitions) {
  adex::BenchConfig bench = adex::default_bench_config();
  if (!flags.config_path.empty() || !flags.preset.empty()) {
    const adex::RunConfigFile file = load_config(flags);
    bench.scenario = file.run.scenario;
    bench.em = file.run.em;
    bench.mc_samples = file.run.mc_samples;
    bench.grid = file.run.grid;
    bench.seed = file.run.seed;
  }
  if (flags.seed) bench.seed = *flags.seed;
  if (flags.steps) bench.scenario.horizon = *flags.steps;
  if (flags.batch) bench.scenario.clicks_per_step = *flags.batch;
  if (flags.mc_samples) bench.mc_samples = *flags.mc_samples;
  bench.repetitions = repetitions;

  const auto table = adex::run_bench(bench);
  const fs::path dir(flags.out_dir.empty() ? "out" : flags.out_dir);
  fs::create_directories(dir);
  adex::AtomicFileWriter csv(dir / "bench.csv");
  csv.stream() << "policy,min,mean,median,max,repetitions\n";
  for (const auto& row : table) {
    csv.stream() << adex::to_string(row.policy) << ',' << csv_double(row.min_s) << ','
                 << csv_double(row.mean_s) << ',' << csv_double(row.median_s) << ','
                 << csv_double(row.max_s) << ',' << row.repetitions << '\n';
    std::cout << adex::to_string(row.policy) << ": min=" << row.min_s << "s mean=" << row.mean_s
              << "s median=" << row.median_s << "s max=" << row.max_s << "s\n";
  }
  csv.commit();
  return exit_ok;
}

int cmd_presets() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& sc : adex::scenario_presets()) {
    nlohmann::json delays = nlohmann::json::array();
    for (const auto& d : sc.delay) delays.push_back(adex::delay_to_json(d));
    out.push_back({{"name", sc.name},
                   {"K", sc.K},
                   {"theta_true", sc.theta_true},
                   {"delay", delays},
                   {"clicks_per_step", sc.clicks_per_step},
                   {"horizon", sc.horizon},
                   {"step_duration", sc.step_duration}});
  }
  std::cout << out.dump(2) << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-corrected adaptive experimentation toolkit"};
  app.set_version_flag("--version", adex::version);
  app.require_subcommand(1);

  CommonFlags flags;
  int repetitions = 50;
  double step_duration = 1.0;
  std::string log_path;

  auto add_common = [&](CLI::App* cmd, bool scenario_flags) {
    cmd->add_option("--config", flags.config_path, "run configuration JSON");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--mc", flags.mc_samples, "Monte-Carlo samples per plan");
    if (scenario_flags) {
      cmd->add_option("--preset", flags.preset, "scenario preset name");
      cmd->add_option("--policy", flags.policy,
                      "random | naive-ts | d-ts | d-ucb | full-bayes");
      cmd->add_option("--steps", flags.steps, "horizon in steps");
      cmd->add_option("--batch", flags.batch, "clicks per step");
    }
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run seeded replications");
  add_common(simulate, true);
  simulate->add_option("--runs", flags.runs, "number of replications");
  simulate->add_flag("--events", flags.events, "export the event log");

  CLI::App* replay = app.add_subcommand("replay", "replay an event log through the estimator");
  add_common(replay, false);
  replay->add_option("--log", log_path, "event log path")->required();
  replay->add_option("--step-duration", step_duration, "time units per step");

  CLI::App* bench = app.add_subcommand("bench", "time per-policy assignment updates");
  add_common(bench, true);
  bench->add_option("--reps", repetitions, "timing repetitions");

  app.add_subcommand("presets", "list scenario presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return exit_config;
  }

  try {
    if (app.got_subcommand("simulate")) return cmd_simulate(flags);
    if (app.got_subcommand("replay")) return cmd_replay(log_path, flags, step_duration);
    if (app.got_subcommand("bench")) return cmd_bench(flags, repetitions);
    return cmd_presets();
  } catch (const adex::ParseError& e) {
    std::cerr << "adex: input error: " << e.what() << "\n";
    return exit_data;
  } catch (const adex::LogError& e) {
    std::cerr << "adex: input error: " << e.what() << "\n";
    return exit_data;
  } catch (const adex::ConfigError& e) {
    std::cerr << "adex: config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    std::cerr << "adex: config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "adex: internal error: " << e.what() << "\n";
    return exit_internal;
  }
}
