#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "adex/event_log.hpp"
#include "adex/replay.hpp"
#include "adex/run_config.hpp"
#include "adex/simulate.hpp"

using namespace adex;
using Catch::Approx;

TEST_CASE("empty stream parses to an empty log") {
  std::istringstream in("");
  auto log = parse_event_log(in);
  CHECK(log.events.empty());
  CHECK(log.n_groups == 0);
}

TEST_CASE("small log parses and replays consistently") {
  std::istringstream in(
      R"({"event":"click","click_id":"a","group":0,"ts":1.0}
{"event":"click","click_id":"b","group":0,"ts":2.0}
{"event":"conversion","click_id":"a","ts":2.5}
)");
  auto log = parse_event_log(in);
  REQUIRE(log.size() == 3);
  auto series = replay_estimates(log, ReplayConfig{1.0, EmConfig{}, 100, 1});
  REQUIRE_FALSE(series.rows.empty());
  // steps strictly increase per group
  long prev = -1;
  for (const auto& row : series.rows)
    if (row.group == 0) {
      CHECK(row.step > prev);
      prev = row.step;
    }
}

TEST_CASE("orphan conversion names the click id") {
  std::istringstream in(R"({"event":"conversion","click_id":"ghost","ts":1.0})");
  try {
    parse_event_log(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("malformed line reports its number") {
  std::istringstream in(
      R"({"event":"click","click_id":"a","group":0,"ts":1.0}
this is not json
)");
  try {
    parse_event_log(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("parser rejects contract violations") {
  auto expect_error = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_event_log(in), ParseError);
  };
  expect_error(R"({"event":"click","click_id":"a","group":-1,"ts":1.0})");
  expect_error(R"({"event":"click","click_id":"a","ts":1.0})");
  expect_error(R"({"event":"wat","click_id":"a","ts":1.0})");
  expect_error("{\"event\":\"click\",\"click_id\":\"a\",\"group\":0,\"ts\":1.0}\n"
               "{\"event\":\"click\",\"click_id\":\"a\",\"group\":0,\"ts\":2.0}");
  expect_error("{\"event\":\"click\",\"click_id\":\"a\",\"group\":0,\"ts\":2.0}\n"
               "{\"event\":\"conversion\",\"click_id\":\"a\",\"ts\":1.0}");
}

TEST_CASE("simulated run round-trips through its event log") {
  RunConfig cfg;
  cfg.scenario = preset_by_name("low_cvr");
  cfg.scenario.horizon = 50;
  cfg.scenario.clicks_per_step = 40;
  cfg.policy = PolicyKind::d_ts;
  cfg.mc_samples = 400;
  cfg.seed = 2024;
  cfg.record_events = true;
  auto res = run_experiment(cfg);

  std::ostringstream out;
  for (const auto& ev : res.events) {
    if (ev.is_click)
      write_event(out, ClickEvent{ev.click_id, ev.group, ev.ts});
    else
      write_event(out, ConversionEvent{ev.click_id, ev.ts});
  }
  std::istringstream in(out.str());
  auto log = parse_event_log(in);
  auto series = replay_estimates(log, ReplayConfig{1.0, cfg.em, cfg.mc_samples, cfg.seed});

  REQUIRE(series.rows.size() == static_cast<std::size_t>(res.trace.steps_run * 3));
  for (long t = 1; t <= res.trace.steps_run; ++t) {
    for (int g = 0; g < 3; ++g) {
      const auto& rec = res.trace.at(t, g);
      const auto& row = series.rows[static_cast<std::size_t>((t - 1) * 3 + g)];
      REQUIRE(row.step == t);
      REQUIRE(row.group == g);
      // bit-exact: replay reproduces the run's own estimate series
      CHECK(row.theta_star == rec.readout.theta_hat);
      CHECK(row.lambda_star == rec.readout.lambda_hat);
      CHECK(row.naive_cvr == rec.readout.naive_cvr);
      CHECK(row.alpha == rec.readout.alpha);
      CHECK(row.beta == rec.readout.beta);
      CHECK(row.p == rec.p_next);
    }
  }
}

TEST_CASE("instant conversions collapse corrected onto matured naive") {
  // delays ~1e-12 are revealed in the click's own step; the corrected
  // estimate equals the naive CVR over matured batches at every step and
  // approaches the overall naive CVR as the current batch's share vanishes
  Scenario sc;
  sc.name = "instant";
  sc.K = 2;
  sc.theta_true = {0.3, 0.25};
  sc.delay = {ExponentialLaw{1e12}, ExponentialLaw{1e12}};
  sc.clicks_per_step = 60;
  sc.horizon = 80;

  RunConfig cfg;
  cfg.scenario = sc;
  cfg.policy = PolicyKind::random;
  cfg.seed = 6;
  cfg.record_events = true;
  auto res = run_experiment(cfg);

  std::ostringstream out;
  for (const auto& ev : res.events) {
    if (ev.is_click)
      write_event(out, ClickEvent{ev.click_id, ev.group, ev.ts});
    else
      write_event(out, ConversionEvent{ev.click_id, ev.ts});
  }
  std::istringstream in(out.str());
  auto log = parse_event_log(in);
  auto series = replay_estimates(log, ReplayConfig{1.0, EmConfig{}, 100, 6});

  std::vector<std::vector<long>> clicks(2), conv(2);
  std::vector<long> cum_clicks(2, 0);
  for (long t = 1; t <= res.trace.steps_run; ++t)
    for (int g = 0; g < 2; ++g) {
      clicks[static_cast<std::size_t>(g)].push_back(res.trace.at(t, g).assigned);
      conv[static_cast<std::size_t>(g)].push_back(res.trace.at(t, g).revealed_cum);
    }
  for (long t = 2; t <= res.trace.steps_run; ++t)
    for (int g = 0; g < 2; ++g) {
      long past = 0;
      for (long s = 1; s < t; ++s)
        past += clicks[static_cast<std::size_t>(g)][static_cast<std::size_t>(s - 1)];
      const long n_conv = conv[static_cast<std::size_t>(g)][static_cast<std::size_t>(t - 1)];
      if (past == 0 || n_conv == 0) continue;
      const auto& row = series.rows[static_cast<std::size_t>((t - 1) * 2 + g)];
      CHECK(row.theta_star == Approx(static_cast<double>(n_conv) / past).epsilon(1e-6));
    }
  // by the last step the matured share dominates: corrected ~ grand naive
  const auto& last0 = series.rows[static_cast<std::size_t>((res.trace.steps_run - 1) * 2)];
  CHECK(last0.theta_star == Approx(last0.naive_cvr).epsilon(0.05));
}

TEST_CASE("matured CVR over an attribution window recovers the latent rate") {
  Scenario sc;
  sc.name = "windowed";
  sc.K = 2;
  sc.theta_true = {0.2, 0.2};
  sc.delay = {ExponentialLaw{1.0 / 20.0}, ExponentialLaw{1.0 / 20.0}};
  sc.clicks_per_step = 50;
  sc.horizon = 1000;

  RunConfig cfg;
  cfg.scenario = sc;
  cfg.policy = PolicyKind::random;
  cfg.seed = 9;
  cfg.record_events = true;
  auto res = run_experiment(cfg);

  std::ostringstream out;
  for (const auto& ev : res.events) {
    if (ev.is_click)
      write_event(out, ClickEvent{ev.click_id, ev.group, ev.ts});
    else
      write_event(out, ConversionEvent{ev.click_id, ev.ts});
  }
  std::istringstream in(out.str());
  auto log = parse_event_log(in);

  // 15-day window at 48 units/day; clicks older than the window are matured
  const double window = 15.0 * 48.0;
  const double cvr = matured_cvr(log, window, 1000.0);
  const long matured_clicks = 50 * (1000 - 720);
  const double se = std::sqrt(0.2 * 0.8 / static_cast<double>(matured_clicks));
  CHECK(std::abs(cvr - 0.2) < 3.0 * se);
}

TEST_CASE("run config parses presets, overrides and defaults") {
  const std::string text = R"({
    "schema_version": 1,
    "scenario": {"preset": "low_cvr", "horizon": 500, "clicks_per_step": 20},
    "policy": "naive-ts",
    "seed": 9,
    "runs": 3,
    "em": {"max_cycles": 25},
    "mc_samples": 111,
    "stopping": {"prob_threshold": 0.95, "dwell_steps": 12},
    "output_dir": "artifacts"
  })";
  auto file = parse_run_config_text(text);
  CHECK(file.run.scenario.name == "low_cvr");
  CHECK(file.run.scenario.horizon == 500);
  CHECK(file.run.scenario.clicks_per_step == 20);
  CHECK(file.run.policy == PolicyKind::naive_ts);
  CHECK(file.run.seed == 9);
  CHECK(file.runs == 3);
  CHECK(file.run.em.max_cycles == 25);
  CHECK(file.run.em.rel_tol == 1e-6);  // default kept
  CHECK(file.run.mc_samples == 111);
  REQUIRE(file.run.stopping.has_value());
  CHECK(file.run.stopping->prob_threshold == 0.95);
  CHECK(file.run.stopping->dwell_steps == 12);
  CHECK(file.output_dir == "artifacts");

  // round trip through serialization
  auto again = parse_run_config(run_config_to_json(file));
  CHECK(again.run.scenario.horizon == 500);
  CHECK(again.run.policy == PolicyKind::naive_ts);
  REQUIRE(again.run.stopping.has_value());
}

TEST_CASE("run config parses explicit scenarios") {
  const std::string text = R"({
    "schema_version": 1,
    "scenario": {
      "name": "custom2",
      "K": 2,
      "theta_true": [0.4, 0.2],
      "delay": [{"type": "weibull", "shape": 1.5, "scale": 100.0},
                {"type": "empirical-mix", "mean_delay": 50.0}],
      "horizon": 100
    }
  })";
  auto file = parse_run_config_text(text);
  CHECK(file.run.scenario.K == 2);
  CHECK(std::get<WeibullLaw>(file.run.scenario.delay[0]).scale == 100.0);
  CHECK(std::get<EmpiricalMixLaw>(file.run.scenario.delay[1]).mean_delay == 50.0);
}

TEST_CASE("run config rejects unknown and invalid keys") {
  CHECK_THROWS_AS(parse_run_config_text(R"({"schema_version": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text(R"(not json)"), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config_text(R"({"schema_version": 2, "scenario": {"preset": "low_cvr"}})"),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config_text(
                      R"({"schema_version": 1, "scenario": {"preset": "low_cvr"}, "typo": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_run_config_text(
          R"({"schema_version": 1, "scenario": {"preset": "low_cvr", "extra": true}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_run_config_text(
          R"({"schema_version": 1, "scenario": {"preset": "low_cvr"}, "policy": "dts"})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      parse_run_config_text(
          R"({"schema_version": 1, "scenario": {"preset": "low_cvr"}, "runs": 0})"),
      ConfigError);
}
