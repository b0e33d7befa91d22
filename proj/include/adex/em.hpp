#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "adex/delay_model.hpp"
#include "adex/errors.hpp"
#include "adex/group_stats.hpp"

namespace adex {

// Estimate of one group's eventual conversion rate and delay parameter.
struct GroupEstimate {
  double theta = 0.1;
  double lambda = 1.0 / 105.0;
  int n_em_cycles = 0;
  bool converged = false;
};

// Cold-start values before any data: the estimator keeps these until the
// first conversion arrives.
inline GroupEstimate initial_estimate() { return GroupEstimate{0.1, 1.0 / 105.0, 0, false}; }

enum class ThetaUpdateMode {
  delay_corrected,  // conversions over the delay-discounted effective sample size
  pure_em           // exact maximizer of the E-M objective, mean posterior weight
};

struct EmConfig {
  int max_cycles = 10;
  double rel_tol = 1e-6;
  ThetaUpdateMode theta_update_mode = ThetaUpdateMode::delay_corrected;
};

namespace clamp_limits {
inline constexpr double theta_min = 1e-6;
inline constexpr double theta_max = 1.0;
inline constexpr double lambda_min = 1e-9;
inline constexpr double lambda_max = 1e9;
inline constexpr double weight_eps = 1e-12;
}  // namespace clamp_limits

// Posterior probability that a click eventually converts, given its current
// observation. Converted clicks are certain. For an unconverted click with
// survival probability S = 1 - F(elapsed):
//     w = S*theta / (1 - theta + S*theta).
// Degenerate theta outside (0,1) is clamped to [1e-12, 1-1e-12] so the ratio
// stays finite.
inline double e_step_weight(double theta, double survival, bool converted) {
  if (converted) return 1.0;
  const double th =
      std::clamp(theta, clamp_limits::weight_eps, 1.0 - clamp_limits::weight_eps);
  const double s = std::clamp(survival, 0.0, 1.0);
  return s * th / (1.0 - th + s * th);
}

// Weighted elapsed-time sum for the exponential rate update: converted clicks
// contribute their realized delay with weight one; each unconverted batch
// contributes weight * elapsed * count.
inline double weighted_elapsed_sum(const ObservationSnapshot& snap,
                                   std::span<const double> unconverted_weights) {
  double sum = snap.converted_delay_sum;
  for (std::size_t i = 0; i < snap.batch_count(); ++i)
    sum += unconverted_weights[i] * snap.elapsed(i) * static_cast<double>(snap.unconverted_by_batch[i]);
  return sum;
}

// Maximization step for the exponential rate. With no conversions observed
// there is nothing to fit and the prior rate is kept (cold-start rule). A
// zero denominator alongside positive conversions cannot come from a
// consistent snapshot and is rejected.
inline double m_step_lambda(const ObservationSnapshot& snap,
                            std::span<const double> unconverted_weights,
                            double prior_lambda) {
  if (snap.n_convert == 0) return prior_lambda;
  const double denom = weighted_elapsed_sum(snap, unconverted_weights);
  if (denom <= 0.0)
    throw EstimationError("conversions present but weighted elapsed time is zero");
  const double lambda = static_cast<double>(snap.n_convert) / denom;
  return std::clamp(lambda, clamp_limits::lambda_min, clamp_limits::lambda_max);
}

// Delay-discounted effective sample size  sum_s n_s * F(t - s)  under an
// exponential delay with the given rate. Batches with zero elapsed time
// contribute nothing.
inline double effective_sample_size(const ObservationSnapshot& snap, double lambda) {
  double sum = 0.0;
  for (std::size_t i = 0; i < snap.batch_count(); ++i)
    sum += static_cast<double>(snap.clicks_by_batch[i]) *
           (-std::expm1(-lambda * snap.elapsed(i)));
  return sum;
}

struct ThetaEstimate {
  double value = 0.0;
  bool clamped = false;         // raw ratio exceeded 1 (or fell below the floor)
  bool no_information = false;  // zero effective sample size; prior returned
};

// Eventual CVR from the delay-corrected estimator: conversions divided by the
// effective sample size. Small samples can push the raw ratio above one, in
// which case it is clamped so downstream Beta updates stay valid.
inline ThetaEstimate delay_corrected_theta(const ObservationSnapshot& snap, double lambda,
                                           double prior_theta) {
  const double denom = effective_sample_size(snap, lambda);
  if (denom <= 0.0) return ThetaEstimate{prior_theta, false, true};
  const double raw = static_cast<double>(snap.n_convert) / denom;
  const double value = std::clamp(raw, clamp_limits::theta_min, clamp_limits::theta_max);
  return ThetaEstimate{value, value != raw, false};
}

// Exact theta maximizer of the E-M objective: mean posterior weight.
inline double pure_em_theta(double weight_sum, long n_total) {
  if (n_total <= 0) throw std::invalid_argument("pure_em_theta requires clicks");
  return weight_sum / static_cast<double>(n_total);
}

// Censored log-likelihood of (theta, lambda) on a snapshot:
//   sum over converted clicks of log(theta * f(D_i))
// + sum over unconverted clicks of log(1 - theta + theta * (1 - F(e))).
inline double censored_log_likelihood(const ObservationSnapshot& snap, double theta,
                                      double lambda) {
  if (snap.n_total == 0) return 0.0;
  const double th = std::clamp(theta, clamp_limits::weight_eps, 1.0);
  double ll = static_cast<double>(snap.n_convert) * (std::log(th) + std::log(lambda)) -
              lambda * snap.converted_delay_sum;
  for (std::size_t i = 0; i < snap.batch_count(); ++i) {
    const long u = snap.unconverted_by_batch[i];
    if (u == 0) continue;
    const double surv = std::exp(-lambda * snap.elapsed(i));
    ll += static_cast<double>(u) * std::log(1.0 - th + th * surv);
  }
  return ll;
}

// Runs the E-M cycles for one group at one observation time, warm-started
// from the previous step's estimate. Each cycle recomputes the per-batch
// posterior weights, refits the rate, then updates theta according to the
// configured mode. Stops early once both parameters' relative change falls
// below rel_tol.
//
// Cold-start rules: an empty snapshot or one without conversions returns the
// prior unchanged.
inline GroupEstimate run_em(const ObservationSnapshot& snap, const GroupEstimate& prior,
                            const EmConfig& config) {
  if (config.max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
  if (snap.n_total == 0 || snap.n_convert == 0)
    return GroupEstimate{prior.theta, prior.lambda, 0, true};

  const std::size_t n_batches = snap.batch_count();
  std::vector<double> elapsed(n_batches);
  for (std::size_t i = 0; i < n_batches; ++i) elapsed[i] = snap.elapsed(i);

  double theta = std::clamp(prior.theta, clamp_limits::theta_min, clamp_limits::theta_max);
  double lambda = std::clamp(prior.lambda, clamp_limits::lambda_min, clamp_limits::lambda_max);

  // Survival per batch under the current rate; the theta update of cycle l
  // and the weights of cycle l+1 share the same rate, so one evaluation per
  // batch per cycle suffices.
  std::vector<double> survival(n_batches);
  for (std::size_t i = 0; i < n_batches; ++i) survival[i] = std::exp(-lambda * elapsed[i]);
  std::vector<double> weights(n_batches);

  int cycles = 0;
  bool converged = false;
  for (int l = 0; l < config.max_cycles; ++l) {
    ++cycles;
    for (std::size_t i = 0; i < n_batches; ++i)
      weights[i] = e_step_weight(theta, survival[i], false);

    // Rate update. A vanished weighted sum here is the rate running away
    // (all mass matured, weights underflowed), not a broken snapshot: pin
    // the rate at the upper clamp and let the cycle continue.
    const double wsum_elapsed = weighted_elapsed_sum(snap, weights);
    const double lambda_new =
        wsum_elapsed > 0.0
            ? std::clamp(static_cast<double>(snap.n_convert) / wsum_elapsed,
                         clamp_limits::lambda_min, clamp_limits::lambda_max)
            : clamp_limits::lambda_max;
    for (std::size_t i = 0; i < n_batches; ++i)
      survival[i] = std::exp(-lambda_new * elapsed[i]);

    double theta_new;
    if (config.theta_update_mode == ThetaUpdateMode::delay_corrected) {
      double eff = 0.0;
      for (std::size_t i = 0; i < n_batches; ++i)
        eff += static_cast<double>(snap.clicks_by_batch[i]) * (1.0 - survival[i]);
      if (eff > 0.0) {
        theta_new = std::clamp(static_cast<double>(snap.n_convert) / eff,
                               clamp_limits::theta_min, clamp_limits::theta_max);
      } else {
        theta_new = theta;  // no matured batch: keep the prior value
      }
    } else {
      double wsum = static_cast<double>(snap.n_convert);
      for (std::size_t i = 0; i < n_batches; ++i)
        wsum += weights[i] * static_cast<double>(snap.unconverted_by_batch[i]);
      theta_new = std::clamp(pure_em_theta(wsum, snap.n_total), clamp_limits::theta_min,
                             clamp_limits::theta_max);
    }

    const double dl = std::abs(lambda_new - lambda) / std::max(lambda, clamp_limits::lambda_min);
    const double dt = std::abs(theta_new - theta) / std::max(theta, clamp_limits::theta_min);
    lambda = lambda_new;
    theta = theta_new;
    if (dl < config.rel_tol && dt < config.rel_tol) {
      converged = true;
      break;
    }
  }
  return GroupEstimate{theta, lambda, cycles, converged};
}

}  // namespace adex
