#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "adex/errors.hpp"

namespace adex {

// A click with its experiment group and click time (abstract time units).
struct ClickEvent {
  std::string click_id;
  int group = 0;
  double ts = 0.0;
};

// A conversion attributed to a previous click. The delay is ts minus the
// click's ts and must be nonnegative.
struct ConversionEvent {
  std::string click_id;
  double ts = 0.0;
};

// Discretizes continuous time into batch steps of fixed duration. Step s
// covers the interval ((s-1)*dt, s*dt], so every click of batch s has
// occurred by the observation instant s*dt and the batch just collected has
// elapsed time zero.
struct ExperimentClock {
  long step = 0;
  double step_duration = 1.0;

  double time() const noexcept { return static_cast<double>(step) * step_duration; }
  void advance() noexcept { ++step; }

  // Batch step that a timestamp belongs to: the smallest s with s*dt >= ts.
  // The small relative slack absorbs round-trip noise in serialized
  // timestamps that land a few ulp past an exact boundary.
  static long step_of(double ts, double step_duration) {
    if (step_duration <= 0.0) throw std::invalid_argument("step_duration must be positive");
    const double q = ts / step_duration;
    return static_cast<long>(std::ceil(q - 1e-9 * std::max(1.0, std::abs(q))));
  }

  long step_of(double ts) const { return step_of(ts, step_duration); }
};

}  // namespace adex
