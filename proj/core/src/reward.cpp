// SPDX-License-Identifier: Apache-2.0
#include "searchrl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "searchrl/text.hpp"

namespace searchrl {

double f1_reward(std::string_view predicted, std::string_view reference) {
  std::vector<std::string> pred = normalize_words(predicted);
  std::vector<std::string> ref = normalize_words(reference);
  std::size_t pn = pred.size();
  std::size_t rn = ref.size();
  if (pn + rn == 0) return 0.0;

  std::map<std::string, std::size_t> counts;
  for (const std::string& w : pred) ++counts[w];
  std::size_t in = 0;
  for (const std::string& w : ref) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++in;
    }
  }
  return 2.0 * static_cast<double>(in) / static_cast<double>(pn + rn);
}

double f1_reward_multi(std::string_view predicted, const std::vector<std::string>& references) {
  double best = 0.0;
  for (const std::string& ref : references) {
    best = std::max(best, f1_reward(predicted, ref));
  }
  return best;
}

double alpha_schedule(const ScheduleState& s) {
  if (s.max_steps <= 0) throw std::domain_error("alpha_schedule: max_steps must be positive");
  if (s.step < 0 || s.step > s.max_steps) {
    throw std::domain_error("alpha_schedule: step outside [0, max_steps]");
  }
  return 0.5 * (1.0 - static_cast<double>(s.step) / static_cast<double>(s.max_steps));
}

double aggregate_atomic(const std::vector<double>& scores, AggregationStrategy strategy,
                        const std::vector<double>& weights) {
  if (scores.empty()) return 0.0;
  if (strategy == AggregationStrategy::mean) {
    double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
    return sum / static_cast<double>(scores.size());
  }
  if (weights.size() != scores.size()) {
    throw std::invalid_argument("aggregate_atomic: weights/scores length mismatch");
  }
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("aggregate_atomic: negative weight");
    wsum += weights[i];
    acc += weights[i] * scores[i];
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregate_atomic: weights must sum to 1");
  }
  return acc;
}

RewardBreakdown hybrid_reward(bool format_ok, double r_atom, double r_f1, double alpha) {
  RewardBreakdown out;
  out.r_atom = r_atom;
  out.r_f1 = r_f1;
  out.alpha = alpha;
  out.format_ok = format_ok;
  out.final = format_ok ? alpha * r_atom + (1.0 - alpha) * r_f1 : -1.0;
  return out;
}

}  // namespace searchrl
