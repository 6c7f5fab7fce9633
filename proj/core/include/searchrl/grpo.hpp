// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "searchrl/policy.hpp"

namespace searchrl {

// Per-trajectory tensors for the optimizer, aligned with the trajectory's
// token sequence. Environment-origin positions carry mask 0 and are never
// read by the loss; their log-probability entries are free to hold anything.
struct TrajectoryRecordTensors {
  std::vector<std::int32_t> token_ids;   // -1 where the token is not in vocab
  std::vector<std::uint8_t> loss_mask;   // 1 = policy-origin (trainable)
  std::vector<double> logp_old;          // under pi_old at sampling time
  std::vector<double> logp_ref;          // under pi_ref
  std::vector<SparseFeatures> features;  // state features at each position
  std::vector<LegalSet> legal;           // admissible tokens at each position

  std::size_t length() const { return token_ids.size(); }
};

// G same-prompt trajectories with their hybrid rewards: the unit of work.
struct RolloutGroup {
  std::string prompt;
  std::vector<TrajectoryRecordTensors> trajectories;
  std::vector<double> rewards;
};

struct AdvantageSet {
  std::vector<double> values;
};

struct GRPOConfig {
  double clip_eps = 0.2;
  double kl_beta = 1e-3;
  int group_size = 16;
  double learning_rate = 0.5;
};

// Group-relative advantages: (r_i - mean) / std with the population standard
// deviation; a zero-variance group yields all-zero advantages.
// Throws std::invalid_argument when fewer than two rewards are given.
AdvantageSet compute_advantages(const std::vector<double>& rewards);

// Non-negative estimator exp(d) - d - 1 with d = logp_ref - logp_cur,
// i.e. r - log r - 1 for r = pi_ref / pi_cur.
double kl_estimate(double logp_cur, double logp_ref);

struct GrpoResult {
  double loss = 0.0;              // negative of the clipped surrogate objective
  std::vector<double> grad;       // d loss / d weights, same shape as params.weights
  double mean_kl = 0.0;           // same per-trajectory weighting as the loss
  double clip_fraction = 0.0;     // fraction of masked tokens with ratio outside the clip band
  std::size_t masked_tokens = 0;
};

// Clipped surrogate with KL regularization over mask-true tokens only:
// per token min(ratio*A_i, clip(ratio)*A_i) - beta*KL, averaged per
// trajectory and then over the group. Returns the loss (its negative) and
// the exact gradient.
GrpoResult grpo_loss(const RolloutGroup& group, const PolicyParams& params_cur,
                     const GRPOConfig& cfg);

// Gradient-ascent step: params + learning_rate * objective_grad, where
// objective_grad points uphill (i.e. the negated grpo_loss gradient).
// Throws std::invalid_argument on shape mismatch or non-finite entries.
PolicyParams update(const PolicyParams& params_cur, const std::vector<double>& objective_grad,
                    const GRPOConfig& cfg);

}  // namespace searchrl
