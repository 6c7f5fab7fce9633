// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "searchrl/swerm.hpp"

using namespace searchrl;

TEST_CASE("entropy window: eviction keeps the last k values") {
  EntropyWindow w(3);
  w.record(1.0);
  w.record(2.0);
  w.record(3.0);
  w.record(4.0);
  CHECK(w.values() == std::vector<double>{2.0, 3.0, 4.0});
  CHECK(w.count() == 3);
  CHECK(w.step_index() == 4);
  CHECK_THROWS_AS(w.record(-0.1), std::invalid_argument);
}

TEST_CASE("entropy window: mean semantics including warm-up") {
  EntropyWindow w(3);
  CHECK_THROWS_AS(w.mean(), std::logic_error);
  w.record(1.0);
  CHECK(w.mean() == 1.0);
  w.record(0.4);
  CHECK(w.mean() == doctest::Approx(0.7).epsilon(1e-15));
  w.record(1.0);
  w.record(1.0);
  w.record(1.0);
  CHECK(w.mean() == doctest::Approx(1.0));
}

TEST_CASE("entropy window: contents equal a brute-force last-k slice") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t k = 1 + rng() % 6;
    EntropyWindow w(k);
    std::vector<double> all;
    int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      double h = static_cast<double>(rng() % 1000) / 500.0;
      all.push_back(h);
      w.record(h);
    }
    std::size_t take = std::min(k, all.size());
    std::vector<double> expect(all.end() - take, all.end());
    CHECK(w.values() == expect);
  }
}

TEST_CASE("delta sign convention") {
  CHECK(delta(0.9, 0.9) == 0.0);
  CHECK(delta(1.0, 0.8) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(delta(0.5, 0.7) == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("should_intervene: strict threshold") {
  SwermConfig cfg;
  cfg.tau = 0.1;
  CHECK(should_intervene(0.1000000001, cfg));
  CHECK_FALSE(should_intervene(0.1, cfg)); // equality never triggers
  CHECK_FALSE(should_intervene(-0.5, cfg));
}

TEST_CASE("intervene: multiplicative bump capped at max_temp") {
  SwermConfig cfg;
  cfg.temp_factor = 1.2;
  cfg.max_temp = 2.0;
  Intervention iv = intervene(1.0, cfg);
  CHECK(iv.new_temperature == doctest::Approx(1.2));
  CHECK(iv.resample);
  iv = intervene(2.0, cfg);
  CHECK(iv.new_temperature == 2.0); // capped, resample still issued
  CHECK(iv.resample);
}

TEST_CASE("controller: hand-evaluated collapse case") {
  SwermConfig cfg;
  cfg.window = 3;
  cfg.tau = 0.1;
  SwermController ctl(cfg, 1.0);
  CHECK_FALSE(ctl.on_step(1.0).has_value());
  CHECK_FALSE(ctl.on_step(1.0).has_value());
  CHECK_FALSE(ctl.on_step(1.0).has_value());
  auto event = ctl.on_step(0.4); // means 1.0 -> 0.8, drop 0.2 > 0.1
  REQUIRE(event.has_value());
  CHECK(event->delta == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(event->old_temperature == 1.0);
  CHECK(event->new_temperature == doctest::Approx(1.2));
  CHECK(ctl.temperature() == doctest::Approx(1.2));
}

TEST_CASE("controller: warm-up disables interventions") {
  SwermConfig cfg;
  cfg.window = 4;
  cfg.tau = 0.05;
  SwermController ctl(cfg, 1.0);
  CHECK_FALSE(ctl.on_step(2.0).has_value());
  CHECK_FALSE(ctl.on_step(0.1).has_value()); // huge drop, but window not yet full
  CHECK_FALSE(ctl.on_step(0.1).has_value());
}

TEST_CASE("controller: temperature reverts after the cool-down") {
  SwermConfig cfg;
  cfg.window = 2;
  cfg.tau = 0.1;
  cfg.cooldown_steps = 2;
  SwermController ctl(cfg, 1.0);
  ctl.on_step(2.0);
  ctl.on_step(2.0);
  auto ev = ctl.on_step(0.0); // collapse
  REQUIRE(ev.has_value());
  CHECK(ctl.temperature() == doctest::Approx(1.2));
  ctl.on_step(0.0);
  CHECK(ctl.temperature() == doctest::Approx(1.2)); // cooling
  ctl.on_step(0.0);
  CHECK(ctl.temperature() == 1.0); // reverted to base
}

TEST_CASE("controller: repeated triggers are monotone and capped") {
  SwermConfig cfg;
  cfg.window = 1;
  cfg.tau = 0.01;
  cfg.temp_factor = 1.5;
  cfg.max_temp = 2.0;
  cfg.cooldown_steps = 100;
  SwermController ctl(cfg, 1.0);
  double h = 8.0;
  double prev_temp = ctl.temperature();
  for (int i = 0; i < 10; ++i) {
    ctl.on_step(h);
    h = std::max(0.0, h - 1.0);
    CHECK(ctl.temperature() >= prev_temp);
    CHECK(ctl.temperature() <= 2.0);
    prev_temp = ctl.temperature();
  }
  CHECK(ctl.temperature() == 2.0);
}

TEST_CASE("controller: smooth sequences never trigger") {
  SwermConfig cfg;
  cfg.window = 4;
  cfg.tau = 0.1;
  SwermController ctl(cfg, 1.0);
  // Step drops bounded by tau*k keep the windowed-mean drop at or below tau.
  double h = 20.0;
  for (int i = 0; i < 50; ++i) {
    CHECK_FALSE(ctl.on_step(h).has_value());
    h = std::max(0.0, h - 0.1 * cfg.window);
  }
}

TEST_CASE("controller: replace_last_entropy feeds the next delta") {
  SwermConfig cfg;
  cfg.window = 2;
  cfg.tau = 0.3;
  SwermController ctl(cfg, 1.0);
  ctl.on_step(1.0);
  auto ev = ctl.on_step(0.2); // means 1.0 -> 0.6: triggers
  REQUIRE(ev.has_value());
  ctl.replace_last_entropy(1.0); // resampled batch restored the entropy
  // Next step: prev mean is (1.0 + 1.0)/2 = 1.0, not the collapsed 0.6.
  auto ev2 = ctl.on_step(0.9); // mean 0.95, drop 0.05 <= tau
  CHECK_FALSE(ev2.has_value());
}
