#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adex/bandit.hpp"
#include "adex/em.hpp"
#include "adex/full_bayes.hpp"
#include "adex/group_stats.hpp"

namespace adex {

enum class PolicyKind { random, naive_ts, d_ts, d_ucb, full_bayes };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::random: return "random";
    case PolicyKind::naive_ts: return "naive-ts";
    case PolicyKind::d_ts: return "d-ts";
    case PolicyKind::d_ucb: return "d-ucb";
    case PolicyKind::full_bayes: return "full-bayes";
  }
  return "unknown";
}

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "random") return PolicyKind::random;
  if (s == "naive-ts") return PolicyKind::naive_ts;
  if (s == "d-ts") return PolicyKind::d_ts;
  if (s == "d-ucb") return PolicyKind::d_ucb;
  if (s == "full-bayes") return PolicyKind::full_bayes;
  throw std::invalid_argument("unknown policy: " + s);
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::d_ts;
  EmConfig em{};
  int mc_samples = 10000;
  GridConfig grid{};
  double exploration_floor = 0.0;
};

// Per-group state a policy exposes after an update; NaN where a policy does
// not produce the quantity.
struct GroupReadout {
  double theta_hat = std::numeric_limits<double>::quiet_NaN();
  double lambda_hat = std::numeric_limits<double>::quiet_NaN();
  double naive_cvr = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
};

// Maps per-group censored snapshots to an assignment plan, carrying the
// warm-start estimates between steps. The Monte-Carlo substream for step t is
// derived from (seed, t), so a plan depends only on the seed, the step, and
// the posteriors - never on how many steps were computed before it.
class PolicyEngine {
 public:
  PolicyEngine(PolicyConfig config, int n_groups, std::uint64_t seed)
      : config_(config),
        seed_(seed),
        estimates_(static_cast<std::size_t>(n_groups), initial_estimate()),
        readouts_(static_cast<std::size_t>(n_groups)) {
    if (n_groups < 2) throw std::invalid_argument("need at least two groups");
  }

  PolicyKind kind() const noexcept { return config_.kind; }
  std::span<const GroupEstimate> estimates() const noexcept { return estimates_; }
  std::span<const GroupReadout> readouts() const noexcept { return readouts_; }

  AssignmentPlan update(std::span<const ObservationSnapshot> snaps, long t) {
    const std::size_t k = estimates_.size();
    if (snaps.size() != k) throw std::invalid_argument("snapshot count mismatch");
    for (std::size_t g = 0; g < k; ++g) {
      readouts_[g] = GroupReadout{};
      readouts_[g].naive_cvr =
          snaps[g].n_total > 0
              ? static_cast<double>(snaps[g].n_convert) / static_cast<double>(snaps[g].n_total)
              : 0.0;
    }

    AssignmentPlan plan;
    switch (config_.kind) {
      case PolicyKind::random: {
        plan.step = t;
        plan.probs.assign(k, 1.0 / static_cast<double>(k));
        break;
      }
      case PolicyKind::naive_ts: {
        std::vector<BetaPosterior> post(k);
        for (std::size_t g = 0; g < k; ++g) {
          post[g] = update_beta_naive(snaps[g].n_convert, snaps[g].n_total);
          readouts_[g].alpha = post[g].alpha;
          readouts_[g].beta = post[g].beta;
          readouts_[g].theta_hat = readouts_[g].naive_cvr;
        }
        plan = assignment_probs_mc(post, config_.mc_samples, mc_seed(t), t);
        break;
      }
      case PolicyKind::d_ts: {
        std::vector<BetaPosterior> post(k);
        for (std::size_t g = 0; g < k; ++g) {
          estimates_[g] = run_em(snaps[g], estimates_[g], config_.em);
          post[g] = update_beta_dts(snaps[g].n_convert, estimates_[g].theta);
          readouts_[g].theta_hat = estimates_[g].theta;
          readouts_[g].lambda_hat = estimates_[g].lambda;
          readouts_[g].alpha = post[g].alpha;
          readouts_[g].beta = post[g].beta;
        }
        plan = assignment_probs_mc(post, config_.mc_samples, mc_seed(t), t);
        break;
      }
      case PolicyKind::d_ucb: {
        std::vector<double> theta(k), eff(k);
        for (std::size_t g = 0; g < k; ++g) {
          estimates_[g] = run_em(snaps[g], estimates_[g], config_.em);
          theta[g] = estimates_[g].theta;
          eff[g] = effective_sample_size(snaps[g], estimates_[g].lambda);
          readouts_[g].theta_hat = estimates_[g].theta;
          readouts_[g].lambda_hat = estimates_[g].lambda;
        }
        plan = one_hot_plan(ducb_scores(theta, eff, t), t);
        break;
      }
      case PolicyKind::full_bayes: {
        const double q = 1.0 - 1.0 / static_cast<double>(std::max<long>(t, 1));
        std::vector<double> scores(k);
        for (std::size_t g = 0; g < k; ++g) {
          const GridPosterior post = full_bayes_grid(snaps[g], config_.grid);
          scores[g] = post.theta_quantile(q);
          readouts_[g].theta_hat = post.theta_mean();
        }
        plan = one_hot_plan(scores, t);
        break;
      }
    }
    return with_exploration_floor(std::move(plan), config_.exploration_floor);
  }

 private:
  std::uint64_t mc_seed(long t) const {
    return derive_seed(seed_, static_cast<std::uint64_t>(t));
  }

  PolicyConfig config_;
  std::uint64_t seed_;
  std::vector<GroupEstimate> estimates_;
  std::vector<GroupReadout> readouts_;
};

}  // namespace adex
