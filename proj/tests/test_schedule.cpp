#include <doctest.h>

#include <cmath>

#include "storsim/errors.hpp"
#include "storsim/schedule.hpp"

using namespace storsim;

TEST_CASE("base_rate 48 of 48 saturates the schedule") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  config.agents[2].base_rate = 48;
  EpisodeSchedule schedule = build_schedule(config, 1);
  REQUIRE(schedule.slots[2].size() == 48);
  for (int e = 0; e < 48; ++e) CHECK(schedule.scheduled(2, e));
}

TEST_CASE("the malicious override yields exactly 10 distinct slots") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::malicious, 20);
  EpisodeSchedule schedule = build_schedule(config, 7);
  REQUIRE(schedule.slots.size() == 20);
  CHECK(schedule.slots[2].size() == 10);  // Glenn
  for (std::size_t i = 0; i < schedule.slots.size(); ++i) {
    if (i == 2) continue;
    CHECK(schedule.slots[i].size() == 5);
  }
  for (const auto& slots : schedule.slots) {
    for (std::size_t k = 1; k < slots.size(); ++k)
      CHECK(slots[k] > slots[k - 1]);  // distinct, sorted
    for (int slot : slots) {
      CHECK(slot >= 0);
      CHECK(slot < 48);
    }
  }
}

TEST_CASE("a rate above the episode count is an error") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  config.scheduler.base_rate_default = 49;
  CHECK_THROWS_AS(build_schedule(config, 1), ConfigError);
}

TEST_CASE("slot selection is uniform: each slot near 5/48 over many seeds") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  const int seeds = 10000;
  std::vector<int> hits(48, 0);
  for (int seed = 0; seed < seeds; ++seed) {
    EpisodeSchedule schedule = build_schedule(config, seed);
    for (int slot : schedule.slots[2]) hits[static_cast<std::size_t>(slot)] += 1;
  }
  double p = 5.0 / 48.0;
  double sigma = std::sqrt(p * (1 - p) / seeds);
  for (int slot = 0; slot < 48; ++slot) {
    double freq = static_cast<double>(hits[static_cast<std::size_t>(slot)]) / seeds;
    CHECK(std::abs(freq - p) < 3.5 * sigma);
  }
}

TEST_CASE("is_active: stochastic rate 1 is always active") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  config.scheduler.stochastic_rate = 1.0;
  EpisodeSchedule schedule = build_schedule(config, 1);
  Pcg32 rng = derive_stream(1, "activity");
  for (int e = 0; e < 48; ++e) CHECK(is_active(schedule, 2, e, rng));
}

TEST_CASE("is_active: a scheduled slot fires even with rate 0") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  config.scheduler.stochastic_rate = 0.0;
  EpisodeSchedule schedule = build_schedule(config, 1);
  Pcg32 rng = derive_stream(1, "activity");
  int active = 0;
  for (int e = 0; e < 48; ++e)
    if (is_active(schedule, 2, e, rng)) ++active;
  CHECK(active == 5);
}

TEST_CASE("is_active consumes exactly one draw per call") {
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  EpisodeSchedule schedule = build_schedule(config, 1);
  Pcg32 a = derive_stream(9, "activity");
  Pcg32 b = derive_stream(9, "activity");
  for (int e = 0; e < 48; ++e) is_active(schedule, 2, e, a);
  for (int e = 0; e < 48; ++e) b.uniform();
  CHECK(a.state() == b.state());
}

TEST_CASE("marginal activity probability matches the closed form") {
  // P(active) = 1 - (1 - 5/48)(1 - 0.15) = 0.2385...
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 3);
  const double expected = 1.0 - (43.0 / 48.0) * 0.85;

  long long active = 0;
  long long draws = 0;
  int seed = 0;
  while (draws < 100000) {
    EpisodeSchedule schedule = build_schedule(config, seed);
    Pcg32 rng = derive_stream(seed, "activity/2");
    for (int e = 0; e < 48; ++e) {
      if (is_active(schedule, 2, e, rng)) ++active;
      ++draws;
    }
    ++seed;
  }
  double freq = static_cast<double>(active) / static_cast<double>(draws);
  double sigma = std::sqrt(expected * (1 - expected) /
                           static_cast<double>(draws));
  CHECK(expected == doctest::Approx(0.2385).epsilon(1e-3));
  CHECK(std::abs(freq - expected) < 3 * sigma);
}
