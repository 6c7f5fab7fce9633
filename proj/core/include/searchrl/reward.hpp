// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace searchrl {

// One scored trajectory. When the format check fails the final reward is
// exactly -1 regardless of the component scores; otherwise
// final = alpha * r_atom + (1 - alpha) * r_f1.
struct RewardBreakdown {
  double r_f1 = 0.0;
  double r_atom = 0.0;
  double alpha = 0.0;
  double final = 0.0;
  bool format_ok = false;
};

struct ScheduleState {
  int step = 0;      // current training step T
  int max_steps = 1; // T_MAX
};

// Word-level F1 between predicted and reference answers: 2*IN/(PN+RN) over
// lowercased, punctuation-stripped word multisets; 0 when both are empty.
double f1_reward(std::string_view predicted, std::string_view reference);

// Max F1 over a set of acceptable reference answers.
double f1_reward_multi(std::string_view predicted, const std::vector<std::string>& references);

// Linearly decaying mixing coefficient: 0.5 * (1 - T/T_MAX).
// Throws std::domain_error on T < 0, T > T_MAX, or T_MAX <= 0.
double alpha_schedule(const ScheduleState& s);

enum class AggregationStrategy { mean, weighted };

// Combines per-atom scores into the trajectory-level atomic-thought reward.
// Empty score lists aggregate to 0. Weighted aggregation requires weights of
// matching length, non-negative, summing to 1 (validated, throws otherwise).
double aggregate_atomic(const std::vector<double>& scores,
                        AggregationStrategy strategy = AggregationStrategy::mean,
                        const std::vector<double>& weights = {});

RewardBreakdown hybrid_reward(bool format_ok, double r_atom, double r_f1, double alpha);

}  // namespace searchrl
