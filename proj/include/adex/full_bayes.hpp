#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adex/em.hpp"
#include "adex/group_stats.hpp"

namespace adex {

// Grid for the numerical (theta, lambda) posterior: theta on a regular grid
// over (0,1), lambda log-spaced over [lambda_min, lambda_max].
struct GridConfig {
  int theta_points = 100;
  int lambda_points = 100;
  double lambda_min = 1e-5;
  double lambda_max = 1.0;
};

// Normalized joint posterior on the grid, theta-major. Priors are uniform on
// theta and uniform in lambda over the bounded range (Beta(1,1) on both
// rescaled axes), so log-spaced lambda points carry their cell widths as
// prior mass.
class GridPosterior {
 public:
  GridPosterior(std::vector<double> theta, std::vector<double> lambda, std::vector<double> mass)
      : theta_(std::move(theta)), lambda_(std::move(lambda)), mass_(std::move(mass)) {
    theta_marginal_.assign(theta_.size(), 0.0);
    for (std::size_t i = 0; i < theta_.size(); ++i)
      for (std::size_t j = 0; j < lambda_.size(); ++j)
        theta_marginal_[i] += mass_[i * lambda_.size() + j];
  }

  const std::vector<double>& theta_grid() const noexcept { return theta_; }
  const std::vector<double>& lambda_grid() const noexcept { return lambda_; }
  const std::vector<double>& mass() const noexcept { return mass_; }
  const std::vector<double>& theta_marginal() const noexcept { return theta_marginal_; }

  double mass_at(std::size_t theta_idx, std::size_t lambda_idx) const {
    return mass_[theta_idx * lambda_.size() + lambda_idx];
  }

  double theta_mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < theta_.size(); ++i) m += theta_[i] * theta_marginal_[i];
    return m;
  }

  // Smallest grid value whose cumulative marginal mass reaches q.
  double theta_quantile(double q) const {
    const double target = std::clamp(q, 0.0, 1.0);
    double cum = 0.0;
    for (std::size_t i = 0; i < theta_.size(); ++i) {
      cum += theta_marginal_[i];
      if (cum >= target) return theta_[i];
    }
    return theta_.back();
  }

 private:
  std::vector<double> theta_;
  std::vector<double> lambda_;
  std::vector<double> mass_;
  std::vector<double> theta_marginal_;
};

// Numerical posterior over (theta, lambda) for one group's snapshot.
// Everything is accumulated in log space and normalized with log-sum-exp, so
// deeply negative likelihoods renormalize instead of underflowing to NaN.
inline GridPosterior full_bayes_grid(const ObservationSnapshot& snap, const GridConfig& cfg) {
  if (cfg.theta_points < 1 || cfg.lambda_points < 1)
    throw std::invalid_argument("grid needs at least one point per axis");
  if (!(cfg.lambda_min > 0.0) || cfg.lambda_max < cfg.lambda_min)
    throw std::invalid_argument("lambda range invalid");

  std::vector<double> theta(cfg.theta_points);
  for (int i = 0; i < cfg.theta_points; ++i)
    theta[i] = (i + 0.5) / static_cast<double>(cfg.theta_points);

  std::vector<double> lambda(cfg.lambda_points);
  if (cfg.lambda_points == 1) {
    lambda[0] = cfg.lambda_min;
  } else {
    const double log_min = std::log(cfg.lambda_min);
    const double step = (std::log(cfg.lambda_max) - log_min) / (cfg.lambda_points - 1);
    for (int j = 0; j < cfg.lambda_points; ++j) lambda[j] = std::exp(log_min + step * j);
  }

  // Uniform-in-lambda prior over log-spaced points: mass proportional to the
  // cell width around each point.
  std::vector<double> log_prior(lambda.size(), 0.0);
  if (lambda.size() > 1) {
    for (std::size_t j = 0; j < lambda.size(); ++j) {
      const double lo = (j == 0) ? lambda.front() : 0.5 * (lambda[j - 1] + lambda[j]);
      const double hi = (j + 1 == lambda.size()) ? lambda.back() : 0.5 * (lambda[j] + lambda[j + 1]);
      log_prior[j] = std::log(std::max(hi - lo, 1e-300));
    }
  }

  std::vector<double> log_post(theta.size() * lambda.size());
  double max_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    for (std::size_t j = 0; j < lambda.size(); ++j) {
      const double lp = log_prior[j] + censored_log_likelihood(snap, theta[i], lambda[j]);
      log_post[i * lambda.size() + j] = lp;
      max_lp = std::max(max_lp, lp);
    }
  }

  double z = 0.0;
  for (double lp : log_post) z += std::exp(lp - max_lp);
  std::vector<double> mass(log_post.size());
  for (std::size_t n = 0; n < log_post.size(); ++n)
    mass[n] = std::exp(log_post[n] - max_lp) / z;

  return GridPosterior(std::move(theta), std::move(lambda), std::move(mass));
}

}  // namespace adex
