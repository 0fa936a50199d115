#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace storsim {

enum class Role { voter, candidate, malicious };
enum class TraitMode { big5_random, schwartz_sampled };
enum class Variant { control, bias, malicious };

const char* to_string(Role role);
const char* to_string(Variant variant);
const char* to_string(TraitMode mode);
Variant variant_from_string(const std::string& name);

struct AgentSpec {
  std::string name;
  std::string gender;
  int age = 35;
  Role role = Role::voter;
  std::string goal;
  std::vector<std::string> extra_context;
  std::optional<std::string> policy_proposal;  // candidates only
  int base_rate = -1;  // -1: use scheduler_params.base_rate_default
  TraitMode trait_mode = TraitMode::big5_random;
};

struct GraphParams {
  double p1 = 0.2;
  double p2 = 0.15;
  // Default draws p2 once per direction of a non-reciprocal pair; the
  // alternative reading draws once per unordered pair.
  bool p2_single_draw_per_pair = false;
};

struct SchedulerParams {
  int base_rate_default = 5;   // scheduled app openings per day
  double stochastic_rate = 0.15;  // extra per-episode access probability
};

/// One item of the 20-item values instrument: which value it scores and
/// whether the response scale is reversed.
struct ScoringItem {
  std::string value;
  bool reverse = false;
};

struct ValuesSurveyConfig {
  std::string file;  // empty: no dataset configured
  bool ipsatize = false;
  std::vector<ScoringItem> scoring;  // empty: built-in default map
};

struct AnalyticsFlags {
  bool vote_share_includes_candidates = false;
  bool vote_share_includes_malicious = true;
  bool surveys_write_memories = false;
};

struct CandidateInfo {
  std::string name;  // full name, e.g. "Bill Fredrickson"
  std::string proposal;

  std::string first_name() const;
  std::string last_name() const;
};

struct ScenarioConfig {
  int episodes_per_day = 48;
  int episode_minutes = 30;
  std::uint64_t seed = 0;
  std::string start_datetime = "2024-10-01 08:00";
  Variant variant = Variant::control;
  GraphParams graph;
  SchedulerParams scheduler;
  ValuesSurveyConfig values_survey;
  AnalyticsFlags analytics;
  int feed_window = 10;
  int max_actions_per_session = 3;
  std::vector<std::string> shared_context;
  std::vector<std::string> mastodon_usage_instructions;
  std::vector<AgentSpec> agents;

  int num_agents() const { return static_cast<int>(agents.size()); }
  std::vector<int> candidate_indices() const;
  std::vector<CandidateInfo> candidates() const;
  std::optional<int> index_of(const std::string& agent_name) const;
  int effective_base_rate(const AgentSpec& spec) const {
    return spec.base_rate >= 0 ? spec.base_rate : scheduler.base_rate_default;
  }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

/// Loads and validates a scenario from a JSON file ("//" comments allowed).
/// Pure function of the file bytes.
ScenarioConfig load_scenario(const std::string& path);

/// (De)serialization used by the loader and by checkpoints.
ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& config);

/// The built-in Storhampton mayoral-election scenario in its three variants:
/// control, biased voters, and one malicious partisan (Glenn, usage rate 10).
/// n >= 3; yields 2 candidates and n-2 other agents.
ScenarioConfig builtin_storhampton_scenario(Variant variant, int n);

/// FNV-1a hash of a file's bytes, as fixed-width hex. Used for manifests and
/// checkpoint integrity.
std::string hash_file_hex(const std::string& path);
std::string hash_bytes_hex(const std::string& bytes);

}  // namespace storsim
