#include "storsim/schedule.hpp"

#include <algorithm>
#include <numeric>

#include "storsim/errors.hpp"

namespace storsim {

bool EpisodeSchedule::scheduled(int agent_index, int episode) const {
  const auto& agent_slots = slots.at(static_cast<std::size_t>(agent_index));
  return std::binary_search(agent_slots.begin(), agent_slots.end(), episode);
}

EpisodeSchedule build_schedule(const ScenarioConfig& config,
                               std::uint64_t root_seed) {
  EpisodeSchedule schedule;
  schedule.stochastic_rate = config.scheduler.stochastic_rate;
  schedule.slots.reserve(config.agents.size());

  for (const auto& spec : config.agents) {
    int rate = config.effective_base_rate(spec);
    if (rate > config.episodes_per_day)
      throw ConfigError("agent '" + spec.name + "': base_rate " +
                        std::to_string(rate) + " exceeds episodes_per_day " +
                        std::to_string(config.episodes_per_day));

    // Partial Fisher-Yates over [0, episodes_per_day): the first `rate`
    // positions are a uniform without-replacement sample.
    Pcg32 rng = derive_stream(root_seed, "schedule/" + spec.name);
    std::vector<int> episodes(static_cast<std::size_t>(config.episodes_per_day));
    std::iota(episodes.begin(), episodes.end(), 0);
    for (int i = 0; i < rate; ++i) {
      int j = i + static_cast<int>(rng.uniform_below(
                      static_cast<std::uint32_t>(config.episodes_per_day - i)));
      std::swap(episodes[i], episodes[j]);
    }
    std::vector<int> picked(episodes.begin(), episodes.begin() + rate);
    std::sort(picked.begin(), picked.end());
    schedule.slots.push_back(std::move(picked));
  }
  return schedule;
}

bool is_active(const EpisodeSchedule& schedule, int agent_index, int episode,
               Pcg32& activity_rng) {
  // Always consume exactly one draw so the stream position depends only on
  // the episode index, not on outcomes.
  bool stochastic = activity_rng.uniform() < schedule.stochastic_rate;
  return schedule.scheduled(agent_index, episode) || stochastic;
}

}  // namespace storsim
