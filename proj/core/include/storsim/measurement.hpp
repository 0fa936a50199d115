#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "storsim/agent.hpp"
#include "storsim/llm.hpp"
#include "storsim/platform.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

inline constexpr const char* kUndecided = "undecided";

/// One agent's survey answers for one episode.
struct SurveyRecord {
  int episode = 0;
  std::string agent;
  std::string vote;  // candidate full name or "undecided"
  bool poll_failed = false;
  std::map<std::string, std::optional<int>> favorability;  // candidate -> 1..10
};

struct AnalyticsSnapshot {
  int episode = 0;
  std::vector<std::pair<std::string, double>> vote_share;  // candidates, then undecided
  std::map<std::string, double> mean_favorability;  // over answering agents
  std::map<std::string, int> activity_counts;       // event kind -> count
  std::map<std::string, int> mention_counts;        // candidate -> mentions in fresh text
  std::vector<std::pair<AccountId, AccountId>> graph_edges;
  std::set<AccountId> active_accounts;
};

// ---------------------------------------------------------------------------
// Polls and parsing
// ---------------------------------------------------------------------------

/// Case-insensitive whole-word match of candidate first or last names.
/// Exactly one candidate matched -> that candidate; zero or several ->
/// undecided. Total.
std::string parse_vote(const std::string& text,
                       const std::vector<CandidateInfo>& candidates);

/// First integer token, if it lies in [1,10]. Total.
std::optional<int> parse_favorability(const std::string& text);

struct VotePollResult {
  std::string vote;
  bool failed = false;
};

/// Issues the voting poll ("In one word, name the candidate...") and parses
/// the answer. Backend failure is recorded as undecided with a flag.
VotePollResult poll_vote(AgentState& state,
                         const std::vector<CandidateInfo>& candidates,
                         LlmBackend& llm);

/// Issues the 1..10 favorability poll for one candidate. Out-of-range or
/// absent answers get one retry, then missing.
std::optional<int> poll_favorability(AgentState& state,
                                     const CandidateInfo& candidate,
                                     LlmBackend& llm);

/// Full per-agent survey for one episode: vote plus favorability per
/// candidate.
SurveyRecord survey_agent(AgentState& state,
                          const std::vector<CandidateInfo>& candidates,
                          LlmBackend& llm, int episode);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Vote shares, mean favorability, per-kind activity and candidate-mention
/// counts for one episode. `records` are that episode's survey records for
/// all agents; `events` the episode's event-log slice.
AnalyticsSnapshot aggregate(const std::vector<SurveyRecord>& records,
                            int episode,
                            const std::vector<PlatformEvent>& events,
                            const FollowGraph& graph,
                            const std::set<AccountId>& active_accounts,
                            const std::vector<CandidateInfo>& candidates,
                            const std::vector<AgentSpec>& agents,
                            const AnalyticsFlags& flags);

/// Whole-word candidate mentions (first or last name) in a text.
bool mentions_candidate(const std::string& text, const CandidateInfo& candidate);

// ---------------------------------------------------------------------------
// Run artifacts and export
// ---------------------------------------------------------------------------

struct RunManifest {
  int schema_version = 1;
  std::string config_hash;
  std::uint64_t root_seed = 0;
  std::string backend;  // e.g. "scripted:<hash>" or "remote:<model>"
  std::string variant;
  int num_agents = 0;
  int first_episode = 0;
  int final_episode = 0;  // one past the last completed episode
  std::vector<std::string> artifacts;  // file names relative to the run dir

  std::string to_json_text() const;
  static RunManifest from_json_text(const std::string& text);
};

struct RunArtifacts {
  std::vector<PlatformEvent> events;
  std::vector<SurveyRecord> surveys;
  std::vector<AnalyticsSnapshot> analytics;
  std::vector<TranscriptEntry> transcript;
  RunManifest manifest;
  std::vector<AgentSpec> agent_specs;
  std::vector<CandidateInfo> candidates;
  std::map<std::string, AccountId> account_of;
  int episodes_per_day = 48;
};

struct ExportFormats {
  bool csv = true;
  bool gexf = true;
  bool svg = true;
};

/// Writes survey.csv, analytics.csv, per-episode GEXF graph snapshots, and a
/// two-panel SVG chart of vote share and mean favorability. Deterministic:
/// identical artifacts re-export to byte-identical files. Throws
/// PlatformError on an unwritable directory.
std::vector<std::string> export_artifacts(const RunArtifacts& artifacts,
                                          const std::string& out_dir,
                                          const ExportFormats& formats = {});

}  // namespace storsim
