#pragma once

#include <cstdint>
#include <string>

namespace storsim {

/// Simulated instant, stored as minutes since the Unix epoch (no timezone).
/// All platform timestamps are simulated time, never wall-clock, so runs
/// replay bit-exactly.
using SimTime = std::int64_t;

inline constexpr std::int64_t kMinutesPerDay = 24 * 60;
inline constexpr std::int64_t kMinutesPerYear = 365 * kMinutesPerDay;

/// Parses "YYYY-MM-DD HH:MM". Throws ConfigError on malformed input.
SimTime parse_sim_time(const std::string& text);

/// Formats as "YYYY-MM-DD HH:MM".
std::string format_sim_time(SimTime t);

/// Episode clock: episode e maps to start + e * episode_minutes. Episode -1
/// (provisioning, follow graph, introductions) lands one episode before the
/// scenario start.
struct SimClock {
  SimTime start = 0;
  int episode_minutes = 30;

  SimTime at_episode(int episode) const {
    return start + static_cast<std::int64_t>(episode) * episode_minutes;
  }
};

}  // namespace storsim
