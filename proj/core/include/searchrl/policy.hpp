// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace searchrl {

// Token inventory of the toy policy: tag tokens, payload scaffold tokens and
// content words. Ids are indices into `tokens`.
struct Vocab {
  std::vector<std::string> tokens;
  std::map<std::string, std::int32_t> index;

  std::int32_t id(const std::string& token) const;         // -1 if absent
  std::int32_t require(const std::string& token) const;    // throws if absent
  std::size_t size() const { return tokens.size(); }

  static Vocab from_tokens(std::vector<std::string> tokens); // rejects duplicates
};

// Linear-softmax policy weights, row-major [feature_dim x vocab_size].
// logits(f) = W^T f over sparse features f.
struct PolicyParams {
  std::int32_t feature_dim = 0;
  std::int32_t vocab_size = 0;
  std::vector<double> weights;
  std::uint64_t version = 0;

  double& at(std::int32_t feature, std::int32_t token) {
    return weights[static_cast<std::size_t>(feature) * vocab_size + token];
  }
  double at(std::int32_t feature, std::int32_t token) const {
    return weights[static_cast<std::size_t>(feature) * vocab_size + token];
  }
};

PolicyParams make_params(std::int32_t feature_dim, std::int32_t vocab_size);

// Deep copy with a fresh, strictly increasing version id.
PolicyParams snapshot(const PolicyParams& params);

// Sparse feature vector; indices strictly increasing, values finite.
struct SparseFeatures {
  std::int32_t dim = 0;
  std::vector<std::int32_t> idx;
  std::vector<double> val;
};

// Admissible next tokens at a sampling position. Empty means the full vocab.
using LegalSet = std::vector<std::int32_t>;

std::vector<double> logits(const PolicyParams& params, const SparseFeatures& features);

// log softmax(logits)[token] over the full vocabulary; max-shifted.
double logprob(const PolicyParams& params, const SparseFeatures& features, std::int32_t token);

// log softmax restricted to the legal set (renormalized). The token must be
// in the legal set.
double masked_logprob(const PolicyParams& params, const SparseFeatures& features,
                      const LegalSet& legal, std::int32_t token);

// grad += coeff * d masked_logprob / d weights, written into a row-major
// buffer of the same shape as params.weights.
void accumulate_logprob_grad(const PolicyParams& params, const SparseFeatures& features,
                             const LegalSet& legal, std::int32_t token, double coeff,
                             std::span<double> grad);

// Draws a token from softmax(logits / temperature) over the legal set.
std::int32_t sample(const PolicyParams& params, const SparseFeatures& features,
                    const LegalSet& legal, double temperature, std::mt19937_64& rng);

// One sampling position of a rollout: what the policy saw and could emit.
struct PolicyStep {
  SparseFeatures features;
  LegalSet legal;
};

// Average token-level entropy over the batch: mean over sequences of the
// mean over positions of the exact distribution entropy -sum p log p.
// Throws on an empty batch or an empty sequence.
double batch_entropy(const PolicyParams& params,
                     const std::vector<std::vector<PolicyStep>>& batch);

// Per-position entropy of the (possibly masked) next-token distribution.
double step_entropy(const PolicyParams& params, const SparseFeatures& features,
                    const LegalSet& legal);

// Text checkpoint: header with dimensions, vocab tokens, then weight rows
// with full round-trip precision.
void save_checkpoint(const std::string& path, const PolicyParams& params, const Vocab& vocab);
struct Checkpoint {
  PolicyParams params;
  Vocab vocab;
};
Checkpoint load_checkpoint(const std::string& path);

// Feature map over the episode history: bag of the last `window` tokens
// (vocab-indexed, scaled by 1/window), tool-calls-used and step-index
// counters (scaled by their caps), and a constant bias feature.
class StateFeaturizer {
 public:
  StateFeaturizer(const Vocab* vocab, int window, int max_tool_calls, int max_steps);

  std::int32_t feature_dim() const { return feature_dim_; }
  std::int32_t bias_feature() const { return feature_dim_ - 1; }

  SparseFeatures featurize(std::span<const std::string> history, int tool_calls_used,
                           int step_index) const;

 private:
  const Vocab* vocab_;
  int window_;
  int max_tool_calls_;
  int max_steps_;
  std::int32_t feature_dim_;
};

}  // namespace searchrl
