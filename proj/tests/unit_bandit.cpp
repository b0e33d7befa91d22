#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "adex/bandit.hpp"
#include "adex/full_bayes.hpp"
#include "support/oracles.hpp"

using namespace adex;
using Catch::Approx;

TEST_CASE("update_beta_dts paper-rule cases") {
  auto p0 = update_beta_dts(0, 0.5);
  CHECK(p0.alpha == 1.0);
  CHECK(p0.beta == 1.0);

  auto p1 = update_beta_dts(10, 0.2);
  CHECK(p1.alpha == 11.0);
  CHECK(p1.beta == 41.0);

  auto p2 = update_beta_dts(10, 1.0);
  CHECK(p2.alpha == 11.0);
  CHECK(p2.beta == 1.0);  // max clamp active

  CHECK_THROWS_AS(update_beta_dts(5, 0.0), std::invalid_argument);
}

TEST_CASE("update_beta_naive counts failures directly") {
  auto p0 = update_beta_naive(0, 0);
  CHECK(p0.alpha == 1.0);
  CHECK(p0.beta == 1.0);
  auto p1 = update_beta_naive(3, 10);
  CHECK(p1.alpha == 4.0);
  CHECK(p1.beta == 8.0);
  CHECK_THROWS_AS(update_beta_naive(5, 3), std::invalid_argument);
}

TEST_CASE("dts update with the naive CVR matches the naive update on matured data") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const long n = std::uniform_int_distribution<long>(1, 5000)(rng);
    const long c = std::uniform_int_distribution<long>(1, n)(rng);
    const double naive = static_cast<double>(c) / static_cast<double>(n);
    auto dts = update_beta_dts(c, naive);
    auto plain = update_beta_naive(c, n);
    CHECK(dts.alpha == plain.alpha);
    CHECK(dts.beta == Approx(plain.beta).margin(1e-9));
  }
}

TEST_CASE("identical posteriors split assignment evenly") {
  std::vector<BetaPosterior> post(3, BetaPosterior{5.0, 7.0});
  const int n = 10000;
  auto plan = assignment_probs_mc(post, n, 42);
  const double p = 1.0 / 3.0;
  const double tol = 3.0 * std::sqrt(p * (1.0 - p) / n);
  for (double v : plan.probs) CHECK(std::abs(v - p) < tol);
  validate_plan(plan);
}

TEST_CASE("overwhelming posterior dominance") {
  std::vector<BetaPosterior> post{{101.0, 1.0}, {1.0, 101.0}};
  auto plan = assignment_probs_mc(post, 10000, 7);
  CHECK(plan.probs[0] > 0.999);
}

TEST_CASE("Beta(2,1) beats Beta(1,1) two thirds of the time") {
  // closed form: P(X > Y) = E[X] = 2/3 for X ~ Beta(2,1), Y uniform
  std::vector<BetaPosterior> post{{2.0, 1.0}, {1.0, 1.0}};
  const int n = 10000;
  auto plan = assignment_probs_mc(post, n, 12345);
  const double p = 2.0 / 3.0;
  CHECK(std::abs(plan.probs[0] - p) < 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("assignment probabilities are seed-deterministic") {
  std::vector<BetaPosterior> post{{3.0, 4.0}, {2.0, 9.0}, {11.0, 3.0}};
  auto a = assignment_probs_mc(post, 5000, 99);
  auto b = assignment_probs_mc(post, 5000, 99);
  CHECK(a.probs == b.probs);
  auto c = assignment_probs_mc(post, 5000, 100);
  CHECK(a.probs != c.probs);
}

TEST_CASE("assignment probabilities are permutation-equivariant") {
  // the stream travels with the group: permuting posteriors and their stream
  // keys permutes the probabilities exactly
  std::vector<BetaPosterior> post{{3.0, 4.0}, {2.0, 9.0}, {11.0, 3.0}};
  std::vector<std::uint64_t> keys{0, 1, 2};
  auto base = assignment_probs_mc(post, 4000, 31, 0, keys);

  std::vector<std::size_t> perm{2, 0, 1};
  std::vector<BetaPosterior> post_p(3);
  std::vector<std::uint64_t> keys_p(3);
  for (std::size_t i = 0; i < 3; ++i) {
    post_p[i] = post[perm[i]];
    keys_p[i] = keys[perm[i]];
  }
  auto permuted = assignment_probs_mc(post_p, 4000, 31, 0, keys_p);
  for (std::size_t i = 0; i < 3; ++i) CHECK(permuted.probs[i] == base.probs[perm[i]]);
}

TEST_CASE("ducb explores unsampled groups first") {
  std::vector<double> theta{0.9, 0.1};
  std::vector<double> eff{125.0, 0.0};
  auto scores = ducb_scores(theta, eff, 50);
  CHECK(std::isinf(scores[1]));
  auto plan = one_hot_plan(scores, 50);
  CHECK(plan.probs[1] == 1.0);
}

TEST_CASE("ducb prefers the less-sampled group at equal estimates") {
  std::vector<double> theta{0.2, 0.2};
  std::vector<double> eff{400.0, 100.0};
  auto scores = ducb_scores(theta, eff, 80);
  CHECK(scores[1] > scores[0]);
}

TEST_CASE("ducb index arithmetic") {
  // frozen from independent evaluation of theta + sqrt(2 ln t / n)
  std::vector<double> theta{0.5, 0.4};
  std::vector<double> eff{100.0, 100.0};
  auto scores = ducb_scores(theta, eff, 100);
  CHECK(scores[0] == Approx(0.80348542587702927).epsilon(1e-12));
  CHECK(scores[1] == Approx(0.70348542587702927).epsilon(1e-12));
  CHECK(one_hot_plan(scores, 100).probs[0] == 1.0);
}

TEST_CASE("ducb selection is invariant to a shared shift") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> theta(3), eff(3);
    for (auto& v : theta) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (auto& v : eff) v = std::uniform_real_distribution<double>(1.0, 500.0)(rng);
    const long t = std::uniform_int_distribution<long>(2, 1000)(rng);
    auto base = ducb_scores(theta, eff, t);
    std::vector<double> shifted = theta;
    for (auto& v : shifted) v += 0.37;
    auto moved = ducb_scores(shifted, eff, t);
    const auto a = std::max_element(base.begin(), base.end()) - base.begin();
    const auto b = std::max_element(moved.begin(), moved.end()) - moved.begin();
    CHECK(a == b);
  }
}

TEST_CASE("single-point grid holds all the mass") {
  testing::RawLog log;
  log.obs_step = 3;
  log.clicks = {{1, true, 0.5}, {2, false, 0.0}};
  GridConfig cfg;
  cfg.theta_points = 1;
  cfg.lambda_points = 1;
  cfg.lambda_min = cfg.lambda_max = 0.5;
  auto post = full_bayes_grid(testing::brute_force_snapshot(log), cfg);
  REQUIRE(post.mass().size() == 1);
  CHECK(post.mass()[0] == Approx(1.0));
}

TEST_CASE("grid posterior concentrates on the naive CVR when matured") {
  std::mt19937_64 rng(23);
  testing::RawLog log;
  log.obs_step = 5000;
  std::bernoulli_distribution convert(0.3);
  for (int i = 0; i < 3000; ++i) {
    testing::RawClick c;
    c.batch_step = std::uniform_int_distribution<long>(1, 50)(rng);
    if (convert(rng)) {
      c.converted = true;
      c.delay = std::exponential_distribution<double>(0.5)(rng);
    }
    log.clicks.push_back(c);
  }
  auto snap = testing::brute_force_snapshot(log);
  const double naive = static_cast<double>(snap.n_convert) / static_cast<double>(snap.n_total);
  auto post = full_bayes_grid(snap, GridConfig{});
  CHECK(post.theta_mean() == Approx(naive).margin(0.02));
  double total = 0.0;
  for (double m : post.mass()) {
    CHECK(std::isfinite(m));
    total += m;
  }
  CHECK(total == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid posterior renormalizes deeply negative likelihoods") {
  // large data drives the raw likelihood far below exp-underflow range
  std::mt19937_64 rng(29);
  testing::RawLog log;
  log.obs_step = 2000;
  for (int i = 0; i < 50000; ++i) {
    testing::RawClick c;
    c.batch_step = std::uniform_int_distribution<long>(1, 1999)(rng);
    if (std::bernoulli_distribution(0.1)(rng)) {
      c.converted = true;
      c.delay = std::exponential_distribution<double>(0.01)(rng);
    }
    log.clicks.push_back(c);
  }
  auto post = full_bayes_grid(testing::brute_force_snapshot(log), GridConfig{});
  double total = 0.0;
  for (double m : post.mass()) {
    REQUIRE(std::isfinite(m));
    total += m;
  }
  CHECK(total == Approx(1.0).epsilon(1e-9));
  CHECK(post.theta_quantile(0.99) >= post.theta_quantile(0.5));
}

TEST_CASE("stopping rule honors threshold and dwell") {
  StoppingRule rule{0.9, 3};
  auto plans = [](std::initializer_list<double> p1s) {
    std::vector<AssignmentPlan> hist;
    long t = 1;
    for (double p : p1s) {
      AssignmentPlan plan;
      plan.step = t++;
      plan.probs = {1.0 - p, p};
      hist.push_back(plan);
    }
    return hist;
  };

  auto held = plans({0.91, 0.95, 0.92});
  auto w = check_stopping(held, rule);
  REQUIRE(w.has_value());
  CHECK(*w == 1);

  auto broken = plans({0.91, 0.89, 0.92});
  CHECK_FALSE(check_stopping(broken, rule).has_value());

  auto short_history = plans({0.95, 0.95});
  CHECK_FALSE(check_stopping(short_history, rule).has_value());
}

TEST_CASE("exploration floor mixes toward uniform") {
  AssignmentPlan plan;
  plan.probs = {1.0, 0.0, 0.0};
  auto mixed = with_exploration_floor(plan, 0.05);
  CHECK(mixed.probs[0] == Approx(0.05 + 0.85));
  CHECK(mixed.probs[1] == Approx(0.05));
  validate_plan(mixed);
  CHECK_THROWS_AS(with_exploration_floor(plan, 0.5), std::invalid_argument);
}
