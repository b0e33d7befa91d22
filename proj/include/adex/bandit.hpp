#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adex/rng.hpp"

namespace adex {

struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const noexcept { return alpha / (alpha + beta); }
};

// Beta parameters from the delay-corrected estimate: alpha counts observed
// conversions, beta recovers the effective number of failures implied by
// theta_star. The max keeps beta a valid parameter when the correction
// implies fewer trials than conversions.
inline BetaPosterior update_beta_dts(long n_convert, double theta_star) {
  if (n_convert < 0) throw std::invalid_argument("negative conversion count");
  if (!(theta_star > 0.0) || theta_star > 1.0)
    throw std::invalid_argument("theta_star must lie in (0, 1]");
  const double nc = static_cast<double>(n_convert);
  return BetaPosterior{1.0 + nc, std::max(1.0 - nc + nc / theta_star, 1.0)};
}

// Beta parameters ignoring delay: every click without an observed conversion
// counts as a failure.
inline BetaPosterior update_beta_naive(long n_convert, long n_clicks) {
  if (n_convert < 0 || n_clicks < n_convert)
    throw std::invalid_argument("conversions must lie in [0, clicks]");
  const double nc = static_cast<double>(n_convert);
  return BetaPosterior{1.0 + nc, 1.0 + static_cast<double>(n_clicks) - nc};
}

// Probability vector for routing traffic across the K groups at a step.
struct AssignmentPlan {
  std::vector<double> probs;
  long step = 0;
};

inline void validate_plan(const AssignmentPlan& plan) {
  double sum = 0.0;
  for (double p : plan.probs) {
    if (p < 0.0) throw std::invalid_argument("negative assignment probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("assignment probabilities must sum to 1");
}

// Monte-Carlo probability that each group's Beta draw is the largest.
//
// Each group draws from its own substream, derived from the seed and the
// group's stream key (the slot index unless the caller passes keys that
// travel with the groups). Keeping the stream attached to the group makes
// the result exactly permutation-equivariant, and keeps the result
// deterministic no matter how the draws are scheduled. Exact ties share the
// sample equally among the tied groups.
inline AssignmentPlan assignment_probs_mc(std::span<const BetaPosterior> posteriors,
                                          int n_samples, std::uint64_t seed, long step = 0,
                                          std::span<const std::uint64_t> stream_keys = {}) {
  const std::size_t k = posteriors.size();
  if (k < 2) throw std::invalid_argument("need at least two groups");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (!stream_keys.empty() && stream_keys.size() != k)
    throw std::invalid_argument("stream_keys size mismatch");

  std::vector<double> draws(k * static_cast<std::size_t>(n_samples));
  for (std::size_t g = 0; g < k; ++g) {
    const std::uint64_t key = stream_keys.empty() ? static_cast<std::uint64_t>(g) : stream_keys[g];
    auto rng = make_rng(derive_seed(seed, key));
    std::gamma_distribution<double> ga(posteriors[g].alpha, 1.0);
    std::gamma_distribution<double> gb(posteriors[g].beta, 1.0);
    double* col = draws.data() + g * static_cast<std::size_t>(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      const double x = ga(rng);
      const double y = gb(rng);
      col[i] = (x + y > 0.0) ? x / (x + y) : posteriors[g].mean();
    }
  }

  std::vector<double> counts(k, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    double best = -1.0;
    int ties = 0;
    for (std::size_t g = 0; g < k; ++g) {
      const double v = draws[g * static_cast<std::size_t>(n_samples) + i];
      if (v > best) {
        best = v;
        ties = 1;
      } else if (v == best) {
        ++ties;
      }
    }
    const double share = 1.0 / ties;
    for (std::size_t g = 0; g < k; ++g)
      if (draws[g * static_cast<std::size_t>(n_samples) + i] == best) counts[g] += share;
  }

  AssignmentPlan plan;
  plan.step = step;
  plan.probs.resize(k);
  for (std::size_t g = 0; g < k; ++g) plan.probs[g] = counts[g] / n_samples;
  return plan;
}

// UCB indices over delay-corrected estimates: the usual sqrt(2 ln t / n)
// bonus with the delay-corrected effective sample size in place of n.
// Unexplored groups (zero effective sample) get an infinite index.
inline std::vector<double> ducb_scores(std::span<const double> theta_hat,
                                       std::span<const double> effective_n, long t) {
  if (theta_hat.size() != effective_n.size())
    throw std::invalid_argument("theta_hat/effective_n size mismatch");
  const double log_t = std::log(static_cast<double>(std::max<long>(t, 1)));
  std::vector<double> scores(theta_hat.size());
  for (std::size_t g = 0; g < scores.size(); ++g) {
    if (effective_n[g] > 0.0)
      scores[g] = theta_hat[g] + std::sqrt(2.0 * log_t / effective_n[g]);
    else
      scores[g] = std::numeric_limits<double>::infinity();
  }
  return scores;
}

// One-hot plan for a deterministic index policy; ties go to the lowest index.
inline AssignmentPlan one_hot_plan(std::span<const double> scores, long step) {
  const auto best = std::max_element(scores.begin(), scores.end());
  AssignmentPlan plan;
  plan.step = step;
  plan.probs.assign(scores.size(), 0.0);
  plan.probs[static_cast<std::size_t>(best - scores.begin())] = 1.0;
  return plan;
}

// Mixes a uniform exploration floor into a plan: p' = floor + (1 - K*floor)*p.
inline AssignmentPlan with_exploration_floor(AssignmentPlan plan, double floor) {
  if (floor < 0.0 || floor * static_cast<double>(plan.probs.size()) > 1.0)
    throw std::invalid_argument("exploration floor out of range");
  if (floor == 0.0) return plan;
  const double scale = 1.0 - floor * static_cast<double>(plan.probs.size());
  for (double& p : plan.probs) p = floor + scale * p;
  return plan;
}

// Declares a winner once one group holds at least prob_threshold assignment
// probability for dwell_steps consecutive plans.
struct StoppingRule {
  double prob_threshold = 0.9;
  long dwell_steps = 24;
};

inline std::optional<int> check_stopping(std::span<const AssignmentPlan> plan_history,
                                         const StoppingRule& rule) {
  if (!(rule.prob_threshold > 0.0) || !(rule.prob_threshold < 1.0))
    throw std::invalid_argument("prob_threshold must lie in (0, 1)");
  if (rule.dwell_steps < 1) throw std::invalid_argument("dwell_steps must be >= 1");
  if (plan_history.size() < static_cast<std::size_t>(rule.dwell_steps)) return std::nullopt;
  const std::size_t k = plan_history.back().probs.size();
  const std::size_t first = plan_history.size() - static_cast<std::size_t>(rule.dwell_steps);
  for (std::size_t g = 0; g < k; ++g) {
    bool held = true;
    for (std::size_t i = first; i < plan_history.size(); ++i) {
      if (plan_history[i].probs[g] < rule.prob_threshold) {
        held = false;
        break;
      }
    }
    if (held) return static_cast<int>(g);
  }
  return std::nullopt;
}

}  // namespace adex
