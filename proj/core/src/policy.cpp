// SPDX-License-Identifier: Apache-2.0
#include "searchrl/policy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "searchrl/common.hpp"

namespace searchrl {

namespace {

std::atomic<std::uint64_t> g_version_counter{0};

void check_dims(const PolicyParams& params, const SparseFeatures& features) {
  if (features.dim != params.feature_dim) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  if (features.idx.size() != features.val.size()) {
    throw std::invalid_argument("sparse feature index/value length mismatch");
  }
}

// log(sum exp(z_i)) over the legal subset, max-shifted for stability.
// Returns the max separately so callers can form log-probabilities.
struct LogSumExp {
  double max_logit;
  double log_sum; // log sum exp(z - max)
};

LogSumExp logsumexp_over(const std::vector<double>& z, const LegalSet& legal) {
  double m = -std::numeric_limits<double>::infinity();
  if (legal.empty()) {
    for (double v : z) m = std::max(m, v);
  } else {
    for (std::int32_t t : legal) m = std::max(m, z[t]);
  }
  double s = 0.0;
  if (legal.empty()) {
    for (double v : z) s += std::exp(v - m);
  } else {
    for (std::int32_t t : legal) s += std::exp(z[t] - m);
  }
  return {m, std::log(s)};
}

}  // namespace

std::int32_t Vocab::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

std::int32_t Vocab::require(const std::string& token) const {
  std::int32_t i = id(token);
  if (i < 0) throw std::out_of_range("vocab: unknown token '" + token + "'");
  return i;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens.size(); ++i) {
    auto [it, inserted] = v.index.emplace(v.tokens[i], static_cast<std::int32_t>(i));
    (void)it;
    if (!inserted) throw std::invalid_argument("vocab: duplicate token '" + v.tokens[i] + "'");
  }
  return v;
}

PolicyParams make_params(std::int32_t feature_dim, std::int32_t vocab_size) {
  PolicyParams p;
  p.feature_dim = feature_dim;
  p.vocab_size = vocab_size;
  p.weights.assign(static_cast<std::size_t>(feature_dim) * vocab_size, 0.0);
  p.version = g_version_counter.fetch_add(1) + 1;
  return p;
}

PolicyParams snapshot(const PolicyParams& params) {
  PolicyParams copy = params;
  copy.version = g_version_counter.fetch_add(1) + 1;
  return copy;
}

std::vector<double> logits(const PolicyParams& params, const SparseFeatures& features) {
  check_dims(params, features);
  std::vector<double> z(params.vocab_size, 0.0);
  for (std::size_t k = 0; k < features.idx.size(); ++k) {
    const double x = features.val[k];
    if (x == 0.0) continue;
    const double* row = params.weights.data() +
                        static_cast<std::size_t>(features.idx[k]) * params.vocab_size;
    for (std::int32_t v = 0; v < params.vocab_size; ++v) z[v] += x * row[v];
  }
  return z;
}

double logprob(const PolicyParams& params, const SparseFeatures& features, std::int32_t token) {
  return masked_logprob(params, features, {}, token);
}

double masked_logprob(const PolicyParams& params, const SparseFeatures& features,
                      const LegalSet& legal, std::int32_t token) {
  if (token < 0 || token >= params.vocab_size) {
    throw std::out_of_range("masked_logprob: token id out of range");
  }
  std::vector<double> z = logits(params, features);
  LogSumExp lse = logsumexp_over(z, legal);
  if (!legal.empty() && std::find(legal.begin(), legal.end(), token) == legal.end()) {
    throw std::invalid_argument("masked_logprob: token not in legal set");
  }
  return z[token] - lse.max_logit - lse.log_sum;
}

void accumulate_logprob_grad(const PolicyParams& params, const SparseFeatures& features,
                             const LegalSet& legal, std::int32_t token, double coeff,
                             std::span<double> grad) {
  if (grad.size() != params.weights.size()) {
    throw std::invalid_argument("accumulate_logprob_grad: gradient buffer size mismatch");
  }
  std::vector<double> z = logits(params, features);
  LogSumExp lse = logsumexp_over(z, legal);

  // d logp(y) / d z_v = [v == y] - p_v, with p supported on the legal set.
  std::vector<double> dz(params.vocab_size, 0.0);
  if (legal.empty()) {
    for (std::int32_t v = 0; v < params.vocab_size; ++v) {
      dz[v] = -std::exp(z[v] - lse.max_logit - lse.log_sum);
    }
  } else {
    for (std::int32_t t : legal) {
      dz[t] = -std::exp(z[t] - lse.max_logit - lse.log_sum);
    }
  }
  dz[token] += 1.0;

  for (std::size_t k = 0; k < features.idx.size(); ++k) {
    const double x = coeff * features.val[k];
    if (x == 0.0) continue;
    double* row = grad.data() + static_cast<std::size_t>(features.idx[k]) * params.vocab_size;
    for (std::int32_t v = 0; v < params.vocab_size; ++v) row[v] += x * dz[v];
  }
}

std::int32_t sample(const PolicyParams& params, const SparseFeatures& features,
                    const LegalSet& legal, double temperature, std::mt19937_64& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("sample: temperature must be positive");
  std::vector<double> z = logits(params, features);
  std::vector<std::int32_t> support;
  if (legal.empty()) {
    support.resize(params.vocab_size);
    for (std::int32_t v = 0; v < params.vocab_size; ++v) support[v] = v;
  } else {
    support = legal;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::int32_t t : support) m = std::max(m, z[t] / temperature);
  std::vector<double> cum(support.size());
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    total += std::exp(z[support[i]] / temperature - m);
    cum[i] = total;
  }
  double u = uniform01(rng) * total;
  std::size_t lo = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
  if (lo >= support.size()) lo = support.size() - 1;
  return support[lo];
}

double step_entropy(const PolicyParams& params, const SparseFeatures& features,
                    const LegalSet& legal) {
  std::vector<double> z = logits(params, features);
  LogSumExp lse = logsumexp_over(z, legal);
  double h = 0.0;
  auto add = [&](double logit) {
    double lp = logit - lse.max_logit - lse.log_sum;
    double p = std::exp(lp);
    if (p > 0.0) h -= p * lp;
  };
  if (legal.empty()) {
    for (std::int32_t v = 0; v < params.vocab_size; ++v) add(z[v]);
  } else {
    for (std::int32_t t : legal) add(z[t]);
  }
  return h;
}

double batch_entropy(const PolicyParams& params,
                     const std::vector<std::vector<PolicyStep>>& batch) {
  if (batch.empty()) throw std::invalid_argument("batch_entropy: empty batch");
  double sum_seq = 0.0;
  for (const auto& seq : batch) {
    if (seq.empty()) throw std::invalid_argument("batch_entropy: empty sequence");
    double sum_pos = 0.0;
    for (const PolicyStep& step : seq) {
      sum_pos += step_entropy(params, step.features, step.legal);
    }
    sum_seq += sum_pos / static_cast<double>(seq.size());
  }
  return sum_seq / static_cast<double>(batch.size());
}

void save_checkpoint(const std::string& path, const PolicyParams& params, const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "searchrl-policy 1 " << params.feature_dim << " " << params.vocab_size << " "
      << params.version << "\n";
  for (const std::string& tok : vocab.tokens) out << tok << "\n";
  out.precision(17);
  for (std::int32_t f = 0; f < params.feature_dim; ++f) {
    for (std::int32_t v = 0; v < params.vocab_size; ++v) {
      if (v > 0) out << ' ';
      out << params.at(f, v);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version_tag = 0;
  std::int32_t feature_dim = 0, vocab_size = 0;
  std::uint64_t params_version = 0;
  in >> magic >> version_tag >> feature_dim >> vocab_size >> params_version;
  if (!in || magic != "searchrl-policy" || version_tag != 1 || feature_dim <= 0 ||
      vocab_size <= 0) {
    throw std::runtime_error("load_checkpoint: bad header in " + path);
  }
  std::vector<std::string> tokens(vocab_size);
  for (auto& tok : tokens) {
    if (!(in >> tok)) throw std::runtime_error("load_checkpoint: truncated vocab in " + path);
  }
  Checkpoint ck;
  ck.vocab = Vocab::from_tokens(std::move(tokens));
  ck.params = make_params(feature_dim, vocab_size);
  for (double& w : ck.params.weights) {
    if (!(in >> w)) throw std::runtime_error("load_checkpoint: truncated weights in " + path);
  }
  return ck;
}

StateFeaturizer::StateFeaturizer(const Vocab* vocab, int window, int max_tool_calls,
                                 int max_steps)
    : vocab_(vocab),
      window_(window),
      max_tool_calls_(std::max(1, max_tool_calls)),
      max_steps_(std::max(1, max_steps)),
      feature_dim_(static_cast<std::int32_t>(vocab->size()) + 3) {}

SparseFeatures StateFeaturizer::featurize(std::span<const std::string> history,
                                          int tool_calls_used, int step_index) const {
  SparseFeatures f;
  f.dim = feature_dim_;
  std::map<std::int32_t, double> bag;
  std::size_t start = history.size() > static_cast<std::size_t>(window_)
                          ? history.size() - window_
                          : 0;
  for (std::size_t i = start; i < history.size(); ++i) {
    std::int32_t id = vocab_->id(history[i]);
    if (id >= 0) bag[id] += 1.0 / window_;
  }
  for (const auto& [id, v] : bag) {
    f.idx.push_back(id);
    f.val.push_back(v);
  }
  std::int32_t base = static_cast<std::int32_t>(vocab_->size());
  f.idx.push_back(base);
  f.val.push_back(static_cast<double>(tool_calls_used) / max_tool_calls_);
  f.idx.push_back(base + 1);
  f.val.push_back(static_cast<double>(step_index) / max_steps_);
  f.idx.push_back(base + 2);
  f.val.push_back(1.0);
  return f;
}

}  // namespace searchrl
