// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "searchrl/environment.hpp"
#include "searchrl/policy.hpp"
#include "searchrl/trajectory.hpp"

namespace searchrl {

// Tool-call payload scaffold. Emitted as individual tokens; joined with
// spaces they form {"name": "web_search", "arguments": {"queries": [" q "]}}.
extern const std::array<const char*, 5> kPayloadPrefixTokens;
extern const char kPayloadSuffixToken[];

// Classification of the vocab into structural roles for legality masking.
struct VocabLayout {
  std::int32_t think_open = -1, think_close = -1;
  std::int32_t tool_call_open = -1, tool_call_close = -1;
  std::int32_t answer_open = -1, answer_close = -1;
  std::vector<std::int32_t> atom_opens;
  std::map<std::int32_t, std::int32_t> atom_close_of;
  std::vector<std::int32_t> payload_prefix;
  std::int32_t payload_suffix = -1;
  std::vector<std::int32_t> content;

  static VocabLayout analyze(const Vocab& vocab, const TagSchema& schema = {});
};

struct EpisodeConfig {
  EpisodeLimits limits;
  int max_segment_tokens = 12; // per-segment token budget, tags included
  int search_k = 3;
  int snippet_tokens = 64;
  int feature_window = 8;
  double temperature = 1.0;
  TagSchema schema;
};

// What the policy emits next given state features and the admissible set.
class PolicyHandle {
 public:
  virtual ~PolicyHandle() = default;
  virtual std::int32_t next_token(const SparseFeatures& features, const LegalSet& legal,
                                  double temperature, std::mt19937_64& rng) = 0;
  // Log-probability of the choice under the handle's temperature-1
  // distribution; scripted handles report 0.
  virtual double logprob_temp1(const SparseFeatures& features, const LegalSet& legal,
                               std::int32_t token) const = 0;
};

class SoftmaxPolicy : public PolicyHandle {
 public:
  explicit SoftmaxPolicy(const PolicyParams* params) : params_(params) {}
  std::int32_t next_token(const SparseFeatures& features, const LegalSet& legal,
                          double temperature, std::mt19937_64& rng) override;
  double logprob_temp1(const SparseFeatures& features, const LegalSet& legal,
                       std::int32_t token) const override;

 private:
  const PolicyParams* params_;
};

// Replays a fixed token sequence; throws if a scripted token is not
// admissible at its position.
class ScriptedPolicy : public PolicyHandle {
 public:
  ScriptedPolicy(const Vocab* vocab, std::vector<std::string> script);
  std::int32_t next_token(const SparseFeatures& features, const LegalSet& legal,
                          double temperature, std::mt19937_64& rng) override;
  double logprob_temp1(const SparseFeatures&, const LegalSet&, std::int32_t) const override {
    return 0.0;
  }
  std::size_t consumed() const { return pos_; }

 private:
  const Vocab* vocab_;
  std::vector<std::int32_t> script_;
  std::size_t pos_ = 0;
};

// One sampled trajectory plus everything the optimizer needs, aligned with
// trajectory.tokens. Environment-origin positions have mask 0, token id -1,
// empty features and zero log-probabilities.
struct Rollout {
  Trajectory trajectory;
  std::vector<std::int32_t> token_ids;
  std::vector<std::uint8_t> loss_mask;
  std::vector<double> logp_old;
  std::vector<SparseFeatures> features;
  std::vector<LegalSet> legal;
  bool truncated = false; // ended by an interaction or tool-call limit
};

// Runs one episode against the tool registry. The admissible-token machine
// guarantees the returned trajectory parses and satisfies the structural
// invariants; LimitExceeded from the transition function surfaces as a
// truncated, unanswered terminal trajectory. Reproducible for a fixed seed.
Rollout run_episode(PolicyHandle& policy, const QAItem& item, const ToolRegistry& registry,
                    const Vocab& vocab, const VocabLayout& layout, const EpisodeConfig& cfg,
                    std::uint64_t seed);

// Corpus-backed convenience overload using the default local registry.
Rollout run_episode(PolicyHandle& policy, const QAItem& item, const Corpus& corpus,
                    const Vocab& vocab, const EpisodeConfig& cfg, std::uint64_t seed);

std::vector<std::string> render_tool_response_tokens(const std::vector<SearchHit>& hits,
                                                     const TagSchema& schema = {});

}  // namespace searchrl
