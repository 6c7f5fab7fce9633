// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "searchrl/policy.hpp"

using namespace searchrl;

namespace {

SparseFeatures random_features(std::int32_t dim, std::mt19937_64& rng) {
  SparseFeatures f;
  f.dim = dim;
  for (std::int32_t i = 0; i < dim; ++i) {
    if (rng() % 3 == 0) {
      f.idx.push_back(i);
      f.val.push_back(static_cast<double>(rng() % 17) / 8.0 - 1.0);
    }
  }
  if (f.idx.empty()) {
    f.idx.push_back(0);
    f.val.push_back(1.0);
  }
  return f;
}

PolicyParams random_params(std::int32_t dim, std::int32_t vocab, std::mt19937_64& rng) {
  PolicyParams p = make_params(dim, vocab);
  for (double& w : p.weights) {
    w = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
  }
  return p;
}

}  // namespace

TEST_CASE("zero weights give the uniform distribution") {
  PolicyParams p = make_params(4, 16);
  SparseFeatures f;
  f.dim = 4;
  f.idx = {0, 2};
  f.val = {1.0, 0.5};
  for (std::int32_t t = 0; t < 16; ++t) {
    CHECK(logprob(p, f, t) == doctest::Approx(-std::log(16.0)).epsilon(1e-14));
  }
}

TEST_CASE("a dominant logit saturates") {
  PolicyParams p = make_params(1, 8);
  p.at(0, 3) = 50.0;
  SparseFeatures f;
  f.dim = 1;
  f.idx = {0};
  f.val = {1.0};
  CHECK(std::exp(logprob(p, f, 3)) >= 1.0 - 1e-20);
}

TEST_CASE("probabilities sum to one over the vocab") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    PolicyParams p = random_params(6, 32, rng);
    SparseFeatures f = random_features(6, rng);
    double total = 0.0;
    for (std::int32_t t = 0; t < 32; ++t) total += std::exp(logprob(p, f, t));
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("masked logprob renormalizes over the legal set") {
  std::mt19937_64 rng(3);
  PolicyParams p = random_params(5, 24, rng);
  SparseFeatures f = random_features(5, rng);
  LegalSet legal = {1, 5, 9, 20};
  double total = 0.0;
  for (std::int32_t t : legal) total += std::exp(masked_logprob(p, f, legal, t));
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK_THROWS_AS(masked_logprob(p, f, legal, 2), std::invalid_argument);
}

TEST_CASE("sampling: fixed seed gives identical draws") {
  std::mt19937_64 rng1(42), rng2(42);
  PolicyParams p = random_params(4, 12, rng1);
  std::mt19937_64 seed_a(7), seed_b(7);
  SparseFeatures f = random_features(4, rng1);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample(p, f, {}, 1.0, seed_a) == sample(p, f, {}, 1.0, seed_b));
  }
}

TEST_CASE("sampling: high temperature approaches uniform") {
  std::mt19937_64 rng(4);
  PolicyParams p = random_params(3, 8, rng);
  SparseFeatures f = random_features(3, rng);
  std::mt19937_64 draws(11);
  const int n = 100000;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) ++counts[sample(p, f, {}, 1000.0, draws)];
  // Chi-square against uniform with a generous bound (df = 7).
  double expected = n / 8.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 40.0);
}

TEST_CASE("sampling: near-zero temperature concentrates on the argmax") {
  std::mt19937_64 rng(5);
  PolicyParams p = random_params(3, 8, rng);
  SparseFeatures f = random_features(3, rng);
  std::vector<double> z = logits(p, f);
  std::int32_t best = 0;
  for (std::int32_t t = 1; t < 8; ++t) {
    if (z[t] > z[best]) best = t;
  }
  std::mt19937_64 draws(13);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits += sample(p, f, {}, 0.01, draws) == best ? 1 : 0;
  CHECK(static_cast<double>(hits) / n > 0.99);
}

TEST_CASE("batch entropy: uniform policy gives log V") {
  PolicyParams p = make_params(3, 32);
  std::vector<std::vector<PolicyStep>> batch(2);
  SparseFeatures f;
  f.dim = 3;
  f.idx = {1};
  f.val = {1.0};
  batch[0] = {{f, {}}, {f, {}}};
  batch[1] = {{f, {}}};
  CHECK(batch_entropy(p, batch) == doctest::Approx(std::log(32.0)).epsilon(1e-13));
}

TEST_CASE("batch entropy: saturated policy is near zero") {
  PolicyParams p = make_params(1, 16);
  p.at(0, 2) = 60.0;
  SparseFeatures f;
  f.dim = 1;
  f.idx = {0};
  f.val = {1.0};
  CHECK(batch_entropy(p, {{{f, {}}}}) < 1e-8);
}

TEST_CASE("batch entropy: matches a brute-force oracle") {
  std::mt19937_64 rng(6);
  PolicyParams p = random_params(5, 20, rng);
  std::vector<std::vector<PolicyStep>> batch(2);
  for (auto& seq : batch) {
    int len = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < len; ++i) seq.push_back({random_features(5, rng), {}});
  }
  // Oracle: naive softmax without the max shift, long-double accumulation.
  long double sum_seq = 0.0L;
  for (const auto& seq : batch) {
    long double sum_pos = 0.0L;
    for (const PolicyStep& step : seq) {
      std::vector<double> z = logits(p, step.features);
      long double denom = 0.0L;
      for (double v : z) denom += std::exp(static_cast<long double>(v));
      long double h = 0.0L;
      for (double v : z) {
        long double prob = std::exp(static_cast<long double>(v)) / denom;
        h -= prob * std::log(prob);
      }
      sum_pos += h;
    }
    sum_seq += sum_pos / static_cast<long double>(seq.size());
  }
  double expected = static_cast<double>(sum_seq / batch.size());
  CHECK(batch_entropy(p, batch) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(batch_entropy(p, batch) >= 0.0);
  CHECK_THROWS_AS(batch_entropy(p, {}), std::invalid_argument);
}

TEST_CASE("snapshot: deep copy, increasing versions") {
  std::mt19937_64 rng(7);
  PolicyParams p = random_params(4, 10, rng);
  SparseFeatures f = random_features(4, rng);
  PolicyParams s1 = snapshot(p);
  double before = logprob(p, f, 3);
  CHECK(logprob(s1, f, 3) == before);
  p.at(0, 3) += 2.5;
  CHECK(logprob(s1, f, 3) == before);      // copy untouched by the mutation
  CHECK(logprob(p, f, 3) != before);
  PolicyParams s2 = snapshot(p);
  CHECK(s2.version > s1.version);
  CHECK(s1.version > p.version);
}

TEST_CASE("gradient of masked logprob matches central finite differences") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 40; ++rep) {
    std::int32_t dim = 3 + static_cast<std::int32_t>(rng() % 4);
    std::int32_t vocab = 6 + static_cast<std::int32_t>(rng() % 10);
    PolicyParams p = random_params(dim, vocab, rng);
    SparseFeatures f = random_features(dim, rng);
    LegalSet legal;
    if (rng() % 2 == 0) {
      for (std::int32_t t = 0; t < vocab; ++t) {
        if (rng() % 2 == 0) legal.push_back(t);
      }
      if (legal.size() < 2) legal = {0, 1};
    }
    std::int32_t token = legal.empty() ? static_cast<std::int32_t>(rng() % vocab)
                                       : legal[rng() % legal.size()];

    std::vector<double> grad(p.weights.size(), 0.0);
    accumulate_logprob_grad(p, f, legal, token, 1.0, grad);

    const double h = 1e-5;
    for (int probe = 0; probe < 10; ++probe) {
      std::size_t k = rng() % p.weights.size();
      PolicyParams plus = p, minus = p;
      plus.weights[k] += h;
      minus.weights[k] -= h;
      double fd = (masked_logprob(plus, f, legal, token) -
                   masked_logprob(minus, f, legal, token)) /
                  (2 * h);
      double scale = std::max({1.0, std::abs(fd), std::abs(grad[k])});
      CHECK(std::abs(fd - grad[k]) / scale < 1e-5);
    }
  }
}

TEST_CASE("checkpoint round-trips params and vocab") {
  std::mt19937_64 rng(9);
  Vocab vocab = Vocab::from_tokens({"<think>", "</think>", "<answer>", "</answer>", "word"});
  PolicyParams p = random_params(8, static_cast<std::int32_t>(vocab.size()), rng);
  std::string path =
      (std::filesystem::temp_directory_path() / "searchrl_ck_test.txt").string();
  save_checkpoint(path, p, vocab);
  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.vocab.tokens == vocab.tokens);
  CHECK(ck.params.weights == p.weights);
  CHECK(ck.params.feature_dim == p.feature_dim);
  std::filesystem::remove(path);
}

TEST_CASE("featurizer: bag window, counters, bias") {
  Vocab vocab = Vocab::from_tokens({"a", "b", "c"});
  StateFeaturizer fz(&vocab, 4, 10, 20);
  CHECK(fz.feature_dim() == 6);
  std::vector<std::string> hist = {"a", "zzz", "a", "b", "c", "a"};
  SparseFeatures f = fz.featurize(hist, 3, 5);
  // Window of 4: [a, b, c, a]; "zzz" is out of vocab anyway.
  std::map<std::int32_t, double> got;
  for (std::size_t i = 0; i < f.idx.size(); ++i) got[f.idx[i]] = f.val[i];
  CHECK(got[0] == doctest::Approx(0.5));   // two "a" / window 4
  CHECK(got[1] == doctest::Approx(0.25));  // one "b"
  CHECK(got[2] == doctest::Approx(0.25));  // one "c"
  CHECK(got[3] == doctest::Approx(0.3));   // 3 of 10 tool calls
  CHECK(got[4] == doctest::Approx(0.25));  // step 5 of 20
  CHECK(got[5] == 1.0);                    // bias
}
