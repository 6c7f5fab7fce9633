// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace searchrl {

// Ring buffer of the last k per-step batch entropies.
class EntropyWindow {
 public:
  explicit EntropyWindow(std::size_t capacity);

  // Appends H_T, evicting the oldest value beyond capacity.
  // Throws std::invalid_argument on negative entropy.
  void record(double entropy);

  // Overwrites the most recent value (used when a step's batch is resampled
  // and its entropy replaces the collapsed one). Throws if empty.
  void replace_last(double entropy);

  // Arithmetic mean of the stored values; during warm-up this is the mean
  // over however many values have been recorded. Throws if empty.
  double mean() const;

  std::size_t capacity() const { return capacity_; }
  std::size_t count() const { return values_.size(); }
  bool full() const { return values_.size() == capacity_; }
  std::size_t step_index() const { return step_index_; }

  // Stored values, oldest first.
  std::vector<double> values() const;

 private:
  std::size_t capacity_;
  std::size_t step_index_ = 0;
  std::vector<double> values_; // oldest first
};

struct SwermConfig {
  int window = 5;           // k
  double tau = 0.1;         // collapse threshold on the windowed-mean drop
  double temp_factor = 1.2; // multiplicative temperature increase, > 1
  double max_temp = 2.0;
  int cooldown_steps = 5;   // steps until temperature reverts to base
};

// Windowed-mean drop from step T-1 to T; positive when entropy is falling.
double delta(double mean_prev, double mean_cur);

// Collapse iff the drop strictly exceeds tau.
bool should_intervene(double delta_value, const SwermConfig& cfg);

struct Intervention {
  double new_temperature;
  bool resample; // regenerate the current batch's rollouts at the new temperature
};

Intervention intervene(double current_temperature, const SwermConfig& cfg);

struct InterventionEvent {
  std::size_t step;
  double delta;
  double tau;
  double old_temperature;
  double new_temperature;
};

// Glues the window, trigger rule and temperature bookkeeping across steps.
// Interventions are disabled until the window has seen `window` values.
class SwermController {
 public:
  SwermController(const SwermConfig& cfg, double base_temperature);

  // Records H_T and reports an intervention when the drop in the windowed
  // mean exceeds tau. Also ticks the cool-down that restores the base
  // temperature after an intervention.
  std::optional<InterventionEvent> on_step(double entropy);

  // Replace the recorded entropy after the batch was regenerated, so the
  // next step's drop is measured against the kept batch.
  void replace_last_entropy(double entropy);

  double temperature() const { return temperature_; }
  const EntropyWindow& window() const { return window_; }

 private:
  SwermConfig cfg_;
  double base_temperature_;
  double temperature_;
  int cooldown_remaining_ = 0;
  EntropyWindow window_;
  std::optional<double> prev_mean_;
};

}  // namespace searchrl
