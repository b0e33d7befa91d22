#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>

namespace adex {

// A parameterized delay family usable by the estimator: CDF/survival/density
// plus a closed-form parameter update from the weighted elapsed-time
// statistics the maximization step produces. Only the exponential member is
// fitted here; the concept leaves room for other families.
template <class F>
concept DelayFamily = requires(const typename F::Params& p, double e, double n, double s) {
  { F::cdf(e, p) } -> std::convertible_to<double>;
  { F::survival(e, p) } -> std::convertible_to<double>;
  { F::log_density(e, p) } -> std::convertible_to<double>;
  { F::fit(n, s, p) } -> std::convertible_to<typename F::Params>;
};

struct ExponentialFamily {
  struct Params {
    double rate = 1.0;
  };

  static double cdf(double e, Params p) { return -std::expm1(-p.rate * e); }
  static double survival(double e, Params p) { return std::exp(-p.rate * e); }
  static double log_density(double d, Params p) { return std::log(p.rate) - p.rate * d; }

  // Maximum-likelihood rate given the conversion count and the weighted sum
  // of elapsed times. A zero weighted sum has no finite maximizer; callers
  // decide how to handle it, so `fit` is only called with a positive sum.
  static Params fit(double n_convert, double weighted_elapsed_sum, Params /*prior*/) {
    if (weighted_elapsed_sum <= 0.0)
      throw std::invalid_argument("weighted elapsed sum must be positive");
    return Params{n_convert / weighted_elapsed_sum};
  }
};

static_assert(DelayFamily<ExponentialFamily>);

}  // namespace adex
