#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "adex/events.hpp"
#include "adex/errors.hpp"

namespace adex {

// Censored view of one group at observation step t. Batches are kept as
// parallel vectors sorted by batch step; entries exist only for batches that
// received clicks. Snapshots are value types: building one copies the
// underlying counts, so later ingestion never mutates a returned snapshot.
struct ObservationSnapshot {
  int group = 0;
  long t = 0;
  double step_duration = 1.0;

  std::vector<double> converted_delays;  // realized delays of observed conversions
  double converted_delay_sum = 0.0;
  long n_convert = 0;
  long n_total = 0;

  std::vector<long> batch_steps;           // batch step s, strictly increasing
  std::vector<long> clicks_by_batch;       // n_s
  std::vector<long> unconverted_by_batch;  // clicks of batch s still unconverted at t

  std::size_t batch_count() const noexcept { return batch_steps.size(); }

  // Elapsed time of batch i at the observation instant, in time units.
  double elapsed(std::size_t i) const { return static_cast<double>(t - batch_steps[i]) * step_duration; }
};

// Incremental per-group sufficient statistics. Two ingestion paths feed the
// same counters:
//   - ingest_click / ingest_conversion: id-checked path for replaying event
//     logs (duplicate detection, delay computed from timestamps);
//   - record_clicks / record_conversion: aggregate path for callers that
//     already resolved ids (the simulator), skipping the id registry.
// Both paths apply updates in call order, so a log replayed in the order the
// simulator emitted it reproduces bit-identical statistics.
class GroupStats {
 public:
  GroupStats() = default;
  GroupStats(int group, double step_duration) : group_(group), step_duration_(step_duration) {
    if (step_duration <= 0.0) throw std::invalid_argument("step_duration must be positive");
  }

  int group() const noexcept { return group_; }
  double step_duration() const noexcept { return step_duration_; }
  long n_total() const noexcept { return n_total_; }
  long n_convert() const noexcept { return n_convert_; }
  double converted_delay_sum() const noexcept { return converted_delay_sum_; }
  long last_event_step() const noexcept { return last_event_step_; }
  long duplicate_conversion_count() const noexcept { return duplicate_conversions_; }

  void ingest_click(const ClickEvent& ev, const ExperimentClock& clock) {
    if (ev.group != group_) throw LogError("click " + ev.click_id + " belongs to another group");
    const long s = clock.step_of(ev.ts);
    if (s != clock.step)
      throw LogError("click " + ev.click_id + " is outside the current step");
    if (!registry_.emplace(ev.click_id, ClickInfo{s, ev.ts, false}).second)
      throw LogError("duplicate click_id " + ev.click_id);
    record_clicks(s, 1);
  }

  void ingest_conversion(const ConversionEvent& ev) {
    auto it = registry_.find(ev.click_id);
    if (it == registry_.end()) throw LogError("conversion references unknown click_id " + ev.click_id);
    if (ev.ts < it->second.ts)
      throw LogError("conversion for click_id " + ev.click_id + " precedes the click");
    if (it->second.converted) {
      // Repeat orders count as the one conversion already recorded; the
      // earliest order defined the delay.
      ++duplicate_conversions_;
      return;
    }
    it->second.converted = true;
    record_conversion(it->second.step, ev.ts - it->second.ts);
  }

  // Aggregate path: `count` clicks arrived in batch `step`.
  void record_clicks(long step, long count) {
    if (count < 0) throw std::invalid_argument("negative click count");
    auto& b = batches_[step];
    b.clicks += count;
    b.unconverted += count;
    n_total_ += count;
    if (step > last_event_step_) last_event_step_ = step;
  }

  // Aggregate path: one click of batch `click_step` converted after `delay`.
  void record_conversion(long click_step, double delay) {
    if (delay < 0.0) throw LogError("negative conversion delay");
    auto it = batches_.find(click_step);
    if (it == batches_.end() || it->second.unconverted <= 0)
      throw LogError("conversion for a batch with no unconverted clicks");
    --it->second.unconverted;
    converted_delays_.push_back(delay);
    converted_delay_sum_ += delay;
    ++n_convert_;
  }

  ObservationSnapshot snapshot_at(long t) const {
    if (t < last_event_step_)
      throw std::invalid_argument("snapshot time precedes an ingested event");
    ObservationSnapshot snap;
    snap.group = group_;
    snap.t = t;
    snap.step_duration = step_duration_;
    snap.converted_delays = converted_delays_;
    snap.converted_delay_sum = converted_delay_sum_;
    snap.n_convert = n_convert_;
    snap.n_total = n_total_;
    snap.batch_steps.reserve(batches_.size());
    snap.clicks_by_batch.reserve(batches_.size());
    snap.unconverted_by_batch.reserve(batches_.size());
    for (const auto& [s, b] : batches_) {
      snap.batch_steps.push_back(s);
      snap.clicks_by_batch.push_back(b.clicks);
      snap.unconverted_by_batch.push_back(b.unconverted);
    }
    return snap;
  }

 private:
  struct ClickInfo {
    long step;
    double ts;
    bool converted;
  };
  struct BatchCounts {
    long clicks = 0;
    long unconverted = 0;
  };

  int group_ = 0;
  double step_duration_ = 1.0;
  std::map<long, BatchCounts> batches_;
  std::vector<double> converted_delays_;
  double converted_delay_sum_ = 0.0;
  long n_convert_ = 0;
  long n_total_ = 0;
  long last_event_step_ = 0;
  long duplicate_conversions_ = 0;
  std::unordered_map<std::string, ClickInfo> registry_;
};

}  // namespace adex
