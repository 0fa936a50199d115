#pragma once

#include <cstdint>
#include <vector>

#include "storsim/rng.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

/// Per-agent scheduled activity slots plus the shared stochastic-access rate.
struct EpisodeSchedule {
  std::vector<std::vector<int>> slots;  // per agent, sorted episode indices
  double stochastic_rate = 0.15;

  bool scheduled(int agent_index, int episode) const;
};

/// Independent without-replacement uniform draws per agent: base_rate slots
/// out of episodes_per_day, via the per-agent "schedule/<name>" stream.
/// Throws ConfigError when an agent's rate exceeds the episode count.
EpisodeSchedule build_schedule(const ScenarioConfig& config,
                               std::uint64_t root_seed);

/// True iff the episode is a scheduled slot or the independent
/// Bernoulli(stochastic_rate) draw fires. Consumes exactly one draw from
/// `activity_rng` per call regardless of outcome, so stream positions are a
/// pure function of the episode index.
bool is_active(const EpisodeSchedule& schedule, int agent_index, int episode,
               Pcg32& activity_rng);

}  // namespace storsim
