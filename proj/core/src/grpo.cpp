// SPDX-License-Identifier: Apache-2.0
#include "searchrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace searchrl {

AdvantageSet compute_advantages(const std::vector<double>& rewards) {
  std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("compute_advantages: need at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  double sd = std::sqrt(var);

  AdvantageSet out;
  out.values.resize(g, 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < g; ++i) out.values[i] = (rewards[i] - mean) / sd;
  }
  return out;
}

double kl_estimate(double logp_cur, double logp_ref) {
  double d = logp_ref - logp_cur;
  return std::expm1(d) - d;
}

GrpoResult grpo_loss(const RolloutGroup& group, const PolicyParams& params_cur,
                     const GRPOConfig& cfg) {
  std::size_t g = group.trajectories.size();
  if (g < 2 || group.rewards.size() != g) {
    throw std::invalid_argument("grpo_loss: group must hold G >= 2 trajectories with rewards");
  }
  AdvantageSet adv = compute_advantages(group.rewards);

  GrpoResult result;
  result.grad.assign(params_cur.weights.size(), 0.0);
  double objective = 0.0;
  double kl_weighted = 0.0;
  std::size_t clipped = 0;

  for (std::size_t i = 0; i < g; ++i) {
    const TrajectoryRecordTensors& traj = group.trajectories[i];
    std::size_t n = traj.length();
    if (traj.loss_mask.size() != n || traj.logp_old.size() != n || traj.logp_ref.size() != n ||
        traj.features.size() != n || traj.legal.size() != n) {
      throw std::invalid_argument("grpo_loss: tensor lengths disagree with token count");
    }
    std::size_t masked = 0;
    for (std::size_t t = 0; t < n; ++t) masked += traj.loss_mask[t] ? 1 : 0;
    if (masked == 0) continue; // nothing trainable in this trajectory
    result.masked_tokens += masked;

    const double a = adv.values[i];
    const double token_w = 1.0 / (static_cast<double>(g) * static_cast<double>(masked));

    for (std::size_t t = 0; t < n; ++t) {
      if (!traj.loss_mask[t]) continue;
      double logp_cur =
          masked_logprob(params_cur, traj.features[t], traj.legal[t], traj.token_ids[t]);
      double ratio = std::exp(logp_cur - traj.logp_old[t]);
      double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      double unclipped = ratio * a;
      double clipped_term = clipped_ratio * a;
      bool use_unclipped = unclipped <= clipped_term;
      double surrogate = use_unclipped ? unclipped : clipped_term;
      if (ratio < 1.0 - cfg.clip_eps || ratio > 1.0 + cfg.clip_eps) ++clipped;

      double d = traj.logp_ref[t] - logp_cur;
      double kl = std::expm1(d) - d;
      kl_weighted += token_w * kl;

      objective += token_w * (surrogate - cfg.kl_beta * kl);

      // d objective / d logp_cur, chained through the masked softmax.
      double d_surr = use_unclipped ? unclipped : 0.0; // d(ratio*A)/dlogp = ratio*A
      double d_kl = 1.0 - std::exp(d);                 // d kl / d logp_cur
      double coeff = token_w * (d_surr - cfg.kl_beta * d_kl);
      if (coeff != 0.0) {
        // Gradient of the LOSS is the negative of the objective gradient.
        accumulate_logprob_grad(params_cur, traj.features[t], traj.legal[t], traj.token_ids[t],
                                -coeff, result.grad);
      }
    }
  }

  result.loss = -objective;
  result.mean_kl = kl_weighted;
  result.clip_fraction = result.masked_tokens > 0
                             ? static_cast<double>(clipped) / result.masked_tokens
                             : 0.0;
  return result;
}

PolicyParams update(const PolicyParams& params_cur, const std::vector<double>& objective_grad,
                    const GRPOConfig& cfg) {
  if (objective_grad.size() != params_cur.weights.size()) {
    throw std::invalid_argument("update: gradient shape mismatch");
  }
  for (double v : objective_grad) {
    if (!std::isfinite(v)) throw std::invalid_argument("update: non-finite gradient entry");
  }
  PolicyParams next = snapshot(params_cur);
  for (std::size_t i = 0; i < next.weights.size(); ++i) {
    next.weights[i] = params_cur.weights[i] + cfg.learning_rate * objective_grad[i];
  }
  return next;
}

}  // namespace searchrl
