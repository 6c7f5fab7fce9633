// SPDX-License-Identifier: Apache-2.0
#include "searchrl/swerm.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace searchrl {

EntropyWindow::EntropyWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("EntropyWindow: capacity must be positive");
}

void EntropyWindow::record(double entropy) {
  if (entropy < 0.0) throw std::invalid_argument("EntropyWindow: negative entropy");
  if (values_.size() == capacity_) values_.erase(values_.begin());
  values_.push_back(entropy);
  ++step_index_;
}

void EntropyWindow::replace_last(double entropy) {
  if (values_.empty()) throw std::logic_error("EntropyWindow: replace_last on empty window");
  if (entropy < 0.0) throw std::invalid_argument("EntropyWindow: negative entropy");
  values_.back() = entropy;
}

double EntropyWindow::mean() const {
  if (values_.empty()) throw std::logic_error("EntropyWindow: mean of empty window");
  double sum = std::accumulate(values_.begin(), values_.end(), 0.0);
  return sum / static_cast<double>(values_.size());
}

std::vector<double> EntropyWindow::values() const { return values_; }

double delta(double mean_prev, double mean_cur) { return mean_prev - mean_cur; }

bool should_intervene(double delta_value, const SwermConfig& cfg) {
  return delta_value > cfg.tau;
}

Intervention intervene(double current_temperature, const SwermConfig& cfg) {
  double next = std::min(current_temperature * cfg.temp_factor, cfg.max_temp);
  return {next, true};
}

SwermController::SwermController(const SwermConfig& cfg, double base_temperature)
    : cfg_(cfg),
      base_temperature_(base_temperature),
      temperature_(base_temperature),
      window_(static_cast<std::size_t>(std::max(1, cfg.window))) {}

std::optional<InterventionEvent> SwermController::on_step(double entropy) {
  if (cooldown_remaining_ > 0) {
    --cooldown_remaining_;
    if (cooldown_remaining_ == 0) temperature_ = base_temperature_;
  }

  window_.record(entropy);
  double mean_cur = window_.mean();
  std::optional<InterventionEvent> event;
  bool warmed_up = window_.step_index() >= window_.capacity();
  if (prev_mean_ && warmed_up) {
    double d = delta(*prev_mean_, mean_cur);
    if (should_intervene(d, cfg_)) {
      Intervention iv = intervene(temperature_, cfg_);
      event = InterventionEvent{window_.step_index() - 1, d, cfg_.tau, temperature_,
                                iv.new_temperature};
      temperature_ = iv.new_temperature;
      cooldown_remaining_ = cfg_.cooldown_steps;
    }
  }
  prev_mean_ = mean_cur;
  return event;
}

void SwermController::replace_last_entropy(double entropy) {
  window_.replace_last(entropy);
  prev_mean_ = window_.mean();
}

}  // namespace searchrl
