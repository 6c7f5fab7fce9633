// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>

#include "searchrl/reward.hpp"

using namespace searchrl;

TEST_CASE("f1: identity, disjoint, overlap") {
  CHECK(f1_reward("eiffel tower", "eiffel tower") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f1_reward("red", "blue") == 0.0);
  CHECK(f1_reward("the eiffel tower", "eiffel tower") == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("f1: normalization and multiset semantics") {
  CHECK(f1_reward("Eiffel, Tower!", "eiffel tower") == doctest::Approx(1.0));
  // Repeated words match at most their reference count.
  CHECK(f1_reward("a a", "a") == doctest::Approx(2.0 / 3.0));
  CHECK(f1_reward("", "") == 0.0);
  CHECK(f1_reward("a", "") == 0.0);
  CHECK(f1_reward("", "a") == 0.0);
}

TEST_CASE("f1: word order invariance and bounds") {
  std::mt19937_64 rng(5);
  std::vector<std::string> words = {"one", "two", "three", "four", "five"};
  for (int i = 0; i < 200; ++i) {
    std::shuffle(words.begin(), words.end(), rng);
    std::string a = words[0] + " " + words[1] + " " + words[2];
    std::string b = words[2] + " " + words[0] + " " + words[1];
    double f = f1_reward(a, b);
    CHECK(f == doctest::Approx(1.0));
    std::string c = words[3] + " " + words[4];
    double g = f1_reward(a, c);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("f1: max over multiple references") {
  CHECK(f1_reward_multi("paris", {"london", "paris"}) == doctest::Approx(1.0));
  CHECK(f1_reward_multi("rome", {"london", "paris"}) == 0.0);
}

TEST_CASE("alpha schedule: boundaries and interior") {
  CHECK(alpha_schedule({0, 200}) == 0.5);
  CHECK(alpha_schedule({200, 200}) == 0.0);
  CHECK(alpha_schedule({50, 200}) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK_THROWS_AS(alpha_schedule({201, 200}), std::domain_error);
  CHECK_THROWS_AS(alpha_schedule({-1, 200}), std::domain_error);
  CHECK_THROWS_AS(alpha_schedule({0, 0}), std::domain_error);
}

TEST_CASE("alpha schedule: non-increasing in T") {
  double prev = 1.0;
  for (int t = 0; t <= 300; ++t) {
    double a = alpha_schedule({t, 300});
    CHECK(a <= prev);
    prev = a;
  }
}

TEST_CASE("aggregate_atomic: mean and degenerate cases") {
  CHECK(aggregate_atomic({0.5}) == 0.5);
  CHECK(aggregate_atomic({1.0, 0.0}) == 0.5);
  CHECK(aggregate_atomic({0.2, 0.4, 0.9}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(aggregate_atomic({}) == 0.0);
}

TEST_CASE("aggregate_atomic: weighted") {
  CHECK(aggregate_atomic({1.0, 0.0}, AggregationStrategy::weighted, {0.25, 0.75}) ==
        doctest::Approx(0.25));
  CHECK_THROWS_AS(aggregate_atomic({1.0, 0.0}, AggregationStrategy::weighted, {0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate_atomic({1.0, 0.0}, AggregationStrategy::weighted, {0.9, 0.9}),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate_atomic({1.0, 0.0}, AggregationStrategy::weighted, {-0.5, 1.5}),
                  std::invalid_argument);
}

TEST_CASE("hybrid reward: format branch and mixing") {
  RewardBreakdown bad = hybrid_reward(false, 0.9, 0.9, 0.5);
  CHECK(bad.final == -1.0);
  CHECK_FALSE(bad.format_ok);

  RewardBreakdown pure = hybrid_reward(true, 0.3, 0.7, 0.0);
  CHECK(pure.final == doctest::Approx(0.7).epsilon(1e-15));

  RewardBreakdown mixed = hybrid_reward(true, 0.8, 0.4, 0.5);
  CHECK(mixed.final == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("hybrid reward: range and linearity") {
  std::mt19937_64 rng(3);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 1000; ++i) {
    double ra = uniform(), rf = uniform(), alpha = 0.5 * uniform();
    RewardBreakdown r = hybrid_reward(true, ra, rf, alpha);
    CHECK(r.final >= 0.0);
    CHECK(r.final <= 1.0);
    // Linearity in (r_atom, r_f1).
    RewardBreakdown r2 = hybrid_reward(true, 2 * ra, rf, alpha);
    RewardBreakdown r3 = hybrid_reward(true, 0.0, rf, alpha);
    CHECK(r2.final - r.final == doctest::Approx(r.final - r3.final).epsilon(1e-12));
  }
}
