#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "storsim/llm.hpp"
#include "storsim/memory.hpp"
#include "storsim/persona.hpp"
#include "storsim/platform.hpp"
#include "storsim/rng.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

struct CachedOpinion {
  std::string text;
  std::size_t memory_count = 0;  // store size when computed
};

/// Everything one agent carries through a run. Owned by exactly one worker
/// during an episode; cross-agent interaction goes through the platform.
struct AgentState {
  int index = 0;
  AgentSpec spec;
  TraitSet traits;
  std::string backstory;
  MemoryStore memories;
  AccountId account;
  std::map<std::string, CachedOpinion> opinions;  // candidate name -> cached
  TootId last_seen_toot = 0;  // feed observations are only appended once

  /// Name/age/gender/goal/traits block shared by every prompt.
  std::string persona_header() const;
};

enum class ActionKind {
  post,
  reply,
  boost,
  favorite,
  follow,
  unfollow,
  block,
  unblock,
  update_profile,
  do_nothing,
};

const char* to_string(ActionKind kind);

struct AppAction {
  ActionKind kind = ActionKind::do_nothing;
  TootId target_toot = 0;
  AccountId target_account;
  std::string content;
};

// ---------------------------------------------------------------------------
// Cognition components
// ---------------------------------------------------------------------------

/// Summarizes the agent's general opinion of a candidate from retrieved
/// memories. Cached; recomputed only after new memories arrive.
std::string opinion_on_candidate(AgentState& state,
                                 const CandidateInfo& candidate,
                                 LlmBackend& llm, SimTime now);

/// Combines the cached general opinion, persona, and recent observations
/// into a verdict that explicitly weighs recent events.
std::string current_opinion_on_candidate(
    AgentState& state, const CandidateInfo& candidate,
    const std::vector<MemoryRecord>& recent_observations, LlmBackend& llm,
    SimTime now);

/// Candidate-only: a plan to improve public perception, built from retrieved
/// evaluations of both candidates. The plan is stored as a memory.
std::string plan_public_perception(AgentState& state,
                                   const std::vector<CandidateInfo>& candidates,
                                   LlmBackend& llm, SimTime now);

/// Malicious-only: a strategy to promote the favored candidate and harm the
/// opponent by disinformation. The plan is stored as a memory.
std::string plan_malicious(AgentState& state,
                           const std::vector<CandidateInfo>& candidates,
                           LlmBackend& llm, SimTime now);

// ---------------------------------------------------------------------------
// App sessions
// ---------------------------------------------------------------------------

struct SessionOptions {
  int feed_window = 10;
  int max_actions = 3;
  std::vector<std::string> usage_instructions;
  std::vector<AccountId> known_accounts;  // valid follow/block targets
  RetrievalParams retrieval;
};

/// Parses a backend response against the line-oriented action grammar
/// ("<verb>: <argument>"). Total: junk lines are dropped, boost/reply/
/// favorite targets must come from `feed_ids`, follow-style targets from
/// `known_accounts`, and at most max_actions actions are kept.
std::vector<AppAction> parse_app_actions(
    const std::string& response, const std::set<TootId>& feed_ids,
    const std::set<AccountId>& known_accounts, int max_actions);

/// Rendered feed plus the ids/accounts that are valid action targets.
struct FeedView {
  std::string rendered;
  std::set<TootId> toot_ids;
  std::vector<Toot> toots;
};

FeedView render_feed(PlatformClient& platform, const AgentState& state,
                     int feed_window);

struct SessionDecision {
  std::vector<AppAction> actions;
  std::vector<TranscriptEntry> exchanges;  // this session's LLM calls, in order
};

/// Perceive + decide: reads the feed (appending observations to memory),
/// refreshes the role-specific context (current opinions or plan), prompts
/// for actions, and parses them. No platform mutation happens here, so
/// decisions of distinct agents may run concurrently against a frozen
/// platform. An unparseable response is retried once, then yields
/// do_nothing.
SessionDecision decide_app_session(AgentState& state, PlatformClient& platform,
                                   const std::vector<CandidateInfo>& candidates,
                                   LlmBackend& llm, Pcg32& rng, SimTime now,
                                   const SessionOptions& options);

/// Executes decided actions against the platform in order. Platform errors
/// become observations rather than crashes; an oversize post is truncated and
/// retried once. Returns the observation texts appended to memory.
std::vector<std::string> apply_app_actions(AgentState& state,
                                           PlatformClient& platform,
                                           const std::vector<AppAction>& actions,
                                           SimTime now);

/// decide + apply in one step (the serial path used by tests and simple
/// drivers; the engine splits the phases).
std::vector<AppAction> run_app_session(AgentState& state,
                                       PlatformClient& platform,
                                       const std::vector<CandidateInfo>& candidates,
                                       LlmBackend& llm, Pcg32& rng, SimTime now,
                                       const SessionOptions& options);

}  // namespace storsim
