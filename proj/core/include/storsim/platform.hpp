#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "storsim/rng.hpp"
#include "storsim/scenario.hpp"
#include "storsim/sim_time.hpp"

namespace storsim {

class LlmBackend;

using AccountId = std::string;  // handle, e.g. "bill_fredrickson"
using TootId = std::int64_t;

inline constexpr int kTootMaxChars = 500;

struct Toot {
  TootId id = 0;
  AccountId author;
  std::string text;  // empty for boosts
  SimTime created_at = 0;
  int episode = 0;
  std::optional<TootId> in_reply_to;
  std::vector<AccountId> mentions;
  std::optional<TootId> boost_of;
};

enum class EventKind {
  toot,
  reply,
  boost,
  favorite,
  follow,
  unfollow,
  block,
  unblock,
  profile_update,
};

inline constexpr int kEventKindCount = 9;
const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(const std::string& name);

struct TootPayload {
  TootId id = 0;
  std::string text;
  std::optional<TootId> in_reply_to;
  std::optional<TootId> boost_of;
  std::vector<AccountId> mentions;
};

struct AccountTarget {
  AccountId target;
};

struct TootTarget {
  TootId toot = 0;
};

struct ProfilePayload {
  std::string display_name;
  std::string bio;
};

using EventPayload =
    std::variant<TootPayload, AccountTarget, TootTarget, ProfilePayload>;

/// One platform mutation in the totally ordered, gapless event log. Platform
/// state is exactly the fold of these events over an empty platform.
struct PlatformEvent {
  std::int64_t seq = 0;
  int episode = 0;
  AccountId actor;
  EventKind kind = EventKind::toot;
  EventPayload payload;
};

/// One event per line. Round-trips bit-exactly.
std::string event_to_line(const PlatformEvent& event);
PlatformEvent event_from_line(const std::string& line);

struct FollowGraph {
  std::set<std::pair<AccountId, AccountId>> edges;  // follower -> followee

  bool has(const AccountId& follower, const AccountId& followee) const {
    return edges.count({follower, followee}) > 0;
  }
  std::size_t in_degree(const AccountId& account) const;
  std::size_t out_degree(const AccountId& account) const;
};

// ---------------------------------------------------------------------------
// Client abstraction
// ---------------------------------------------------------------------------

/// Platform operations shared by the in-process emulator and the Mastodon
/// REST client. Both implementations satisfy the same behavior contract:
/// 500-char toots, reverse-chronological home timeline restricted to followed
/// accounts, boost visibility, bidirectional block hiding, and idempotent
/// follow/unfollow/block/unblock.
class PlatformClient {
 public:
  virtual ~PlatformClient() = default;

  /// Binds a handle to an account (creating or claiming one) and sets its
  /// display name and bio. Idempotent for an existing handle.
  virtual AccountId ensure_account(const std::string& handle,
                                   const std::string& display_name,
                                   const std::string& bio) = 0;

  virtual Toot post_toot(const AccountId& actor, const std::string& text) = 0;
  virtual Toot reply(const AccountId& actor, TootId parent,
                     const std::string& text) = 0;
  virtual Toot boost(const AccountId& actor, TootId toot) = 0;
  virtual void favorite(const AccountId& actor, TootId toot) = 0;
  virtual void follow(const AccountId& actor, const AccountId& target) = 0;
  virtual void unfollow(const AccountId& actor, const AccountId& target) = 0;
  virtual void block(const AccountId& actor, const AccountId& target) = 0;
  virtual void unblock(const AccountId& actor, const AccountId& target) = 0;
  virtual void update_profile(const AccountId& actor, const std::string& bio) = 0;

  /// Newest-first toots and boosts from followed accounts, excluding blocked
  /// or blocking parties, truncated to limit.
  virtual std::vector<Toot> home_timeline(const AccountId& actor,
                                          int limit) = 0;

  virtual bool has_account(const AccountId& account) = 0;
  virtual std::optional<Toot> get_toot(TootId id) = 0;
};

// ---------------------------------------------------------------------------
// Emulator
// ---------------------------------------------------------------------------

/// In-process platform. Mutations are serialized through the event log;
/// between mutation phases the state is frozen, so reads may run
/// concurrently.
class Emulator : public PlatformClient {
 public:
  explicit Emulator(SimClock clock = {});

  void set_episode(int episode) { episode_ = episode; }
  int episode() const { return episode_; }

  AccountId ensure_account(const std::string& handle,
                           const std::string& display_name,
                           const std::string& bio) override;
  Toot post_toot(const AccountId& actor, const std::string& text) override;
  Toot reply(const AccountId& actor, TootId parent,
             const std::string& text) override;
  Toot boost(const AccountId& actor, TootId toot) override;
  void favorite(const AccountId& actor, TootId toot) override;
  void follow(const AccountId& actor, const AccountId& target) override;
  void unfollow(const AccountId& actor, const AccountId& target) override;
  void block(const AccountId& actor, const AccountId& target) override;
  void unblock(const AccountId& actor, const AccountId& target) override;
  void update_profile(const AccountId& actor, const std::string& bio) override;
  std::vector<Toot> home_timeline(const AccountId& actor, int limit) override;
  bool has_account(const AccountId& account) override;
  std::optional<Toot> get_toot(TootId id) override;

  const std::vector<PlatformEvent>& events() const { return log_; }
  std::vector<PlatformEvent> events_for_episode(int episode) const;
  FollowGraph follow_graph() const;
  std::vector<AccountId> accounts() const;
  std::string display_name(const AccountId& account) const;
  std::string bio(const AccountId& account) const;
  bool blocked_either_way(const AccountId& a, const AccountId& b) const;
  std::size_t favorite_count(TootId id) const;

  /// Rebuilds state by folding a recorded event log onto this (empty)
  /// emulator. Accounts are materialized from the events themselves.
  void replay(const std::vector<PlatformEvent>& events);

 private:
  struct Account {
    std::string display_name;
    std::string bio;
  };

  void apply(const PlatformEvent& event);
  PlatformEvent& append(EventKind kind, const AccountId& actor,
                        EventPayload payload);
  void require_account(const AccountId& account) const;
  const Toot& require_toot(TootId id) const;
  void require_interaction_allowed(const AccountId& actor,
                                   const AccountId& target) const;
  std::vector<AccountId> extract_mentions(const std::string& text) const;

  SimClock clock_;
  int episode_ = -1;
  std::map<AccountId, Account> accounts_;
  std::vector<AccountId> account_order_;
  std::vector<Toot> toots_;  // id = index + 1
  std::set<std::pair<AccountId, AccountId>> follows_;
  std::set<std::pair<AccountId, AccountId>> blocks_;
  std::set<std::pair<AccountId, TootId>> favorites_;
  std::vector<PlatformEvent> log_;
};

// ---------------------------------------------------------------------------
// Provisioning, follow graph, introductions
// ---------------------------------------------------------------------------

/// Lowercased handle derived from an agent name ("Bill Fredrickson" ->
/// "bill_fredrickson").
std::string handle_for(const std::string& agent_name);

/// Binds each agent spec to an account with display name and a bio
/// summarizing the agent's context. Idempotent.
std::map<std::string, AccountId> provision_accounts(
    PlatformClient& platform, const std::vector<AgentSpec>& specs);

/// Pure edge generator behind init_follow_graph, also used by graph
/// statistics. Indices are agent indices; returned edges are directed pairs.
/// Every agent follows each candidate; for each unordered non-candidate pair
/// one p1 draw decides reciprocal connection, otherwise p2 per direction (or
/// one p2 draw per pair with the alternate flag).
std::vector<std::pair<int, int>> generate_follow_edges(
    int n, const std::vector<int>& candidate_indices, const GraphParams& params,
    Pcg32& rng);

/// Materializes generate_follow_edges on the platform via follow calls, in
/// deterministic order.
FollowGraph init_follow_graph(PlatformClient& platform,
                              const std::vector<AccountId>& accounts,
                              const std::vector<int>& candidate_indices,
                              const GraphParams& params, Pcg32& rng);

struct IntroductionPrompt {
  AccountId account;
  std::string agent_name;
  std::string prompt_text;
};

/// One introductory toot per agent, generated from persona context, so the
/// platform is populated before episode 0.
std::vector<Toot> post_introductions(PlatformClient& platform, LlmBackend& llm,
                                     const std::vector<IntroductionPrompt>& prompts);

}  // namespace storsim
