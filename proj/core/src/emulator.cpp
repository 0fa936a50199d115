#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/llm.hpp"
#include "storsim/platform.hpp"

namespace storsim {

using Json = nlohmann::ordered_json;

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::toot: return "toot";
    case EventKind::reply: return "reply";
    case EventKind::boost: return "boost";
    case EventKind::favorite: return "favorite";
    case EventKind::follow: return "follow";
    case EventKind::unfollow: return "unfollow";
    case EventKind::block: return "block";
    case EventKind::unblock: return "unblock";
    case EventKind::profile_update: return "profile_update";
  }
  return "toot";
}

std::optional<EventKind> event_kind_from_string(const std::string& name) {
  for (int i = 0; i < kEventKindCount; ++i) {
    auto kind = static_cast<EventKind>(i);
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Event log lines
// ---------------------------------------------------------------------------
// One JSON object per line, fixed field order:
//   {"seq":..,"episode":..,"actor":..,"kind":..,"payload":{..}}

std::string event_to_line(const PlatformEvent& event) {
  Json j;
  j["seq"] = event.seq;
  j["episode"] = event.episode;
  j["actor"] = event.actor;
  j["kind"] = to_string(event.kind);
  Json payload;
  if (const auto* toot = std::get_if<TootPayload>(&event.payload)) {
    payload["id"] = toot->id;
    payload["text"] = toot->text;
    if (toot->in_reply_to) payload["in_reply_to"] = *toot->in_reply_to;
    if (toot->boost_of) payload["boost_of"] = *toot->boost_of;
    payload["mentions"] = toot->mentions;
  } else if (const auto* account = std::get_if<AccountTarget>(&event.payload)) {
    payload["target"] = account->target;
  } else if (const auto* toot_target = std::get_if<TootTarget>(&event.payload)) {
    payload["toot"] = toot_target->toot;
  } else if (const auto* profile = std::get_if<ProfilePayload>(&event.payload)) {
    payload["display_name"] = profile->display_name;
    payload["bio"] = profile->bio;
  }
  j["payload"] = payload;
  return j.dump();
}

PlatformEvent event_from_line(const std::string& line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception& e) {
    throw PlatformError(std::string("malformed event line: ") + e.what());
  }
  PlatformEvent event;
  event.seq = j.at("seq").get<std::int64_t>();
  event.episode = j.at("episode").get<int>();
  event.actor = j.at("actor").get<std::string>();
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw PlatformError("unknown event kind in log");
  event.kind = *kind;
  const Json& payload = j.at("payload");
  switch (event.kind) {
    case EventKind::toot:
    case EventKind::reply:
    case EventKind::boost: {
      TootPayload toot;
      toot.id = payload.at("id").get<TootId>();
      toot.text = payload.at("text").get<std::string>();
      if (payload.contains("in_reply_to"))
        toot.in_reply_to = payload.at("in_reply_to").get<TootId>();
      if (payload.contains("boost_of"))
        toot.boost_of = payload.at("boost_of").get<TootId>();
      if (payload.contains("mentions"))
        toot.mentions = payload.at("mentions").get<std::vector<AccountId>>();
      event.payload = std::move(toot);
      break;
    }
    case EventKind::favorite:
      event.payload = TootTarget{payload.at("toot").get<TootId>()};
      break;
    case EventKind::follow:
    case EventKind::unfollow:
    case EventKind::block:
    case EventKind::unblock:
      event.payload = AccountTarget{payload.at("target").get<std::string>()};
      break;
    case EventKind::profile_update:
      event.payload = ProfilePayload{payload.at("display_name").get<std::string>(),
                                     payload.at("bio").get<std::string>()};
      break;
  }
  return event;
}

std::size_t FollowGraph::in_degree(const AccountId& account) const {
  std::size_t n = 0;
  for (const auto& e : edges)
    if (e.second == account) ++n;
  return n;
}

std::size_t FollowGraph::out_degree(const AccountId& account) const {
  std::size_t n = 0;
  for (const auto& e : edges)
    if (e.first == account) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Emulator
// ---------------------------------------------------------------------------

Emulator::Emulator(SimClock clock) : clock_(clock) {}

void Emulator::require_account(const AccountId& account) const {
  if (!accounts_.count(account))
    throw PlatformError("unknown account '" + account + "'");
}

const Toot& Emulator::require_toot(TootId id) const {
  if (id < 1 || id > static_cast<TootId>(toots_.size()))
    throw PlatformError("unknown toot #" + std::to_string(id));
  return toots_[static_cast<std::size_t>(id - 1)];
}

bool Emulator::blocked_either_way(const AccountId& a, const AccountId& b) const {
  return blocks_.count({a, b}) > 0 || blocks_.count({b, a}) > 0;
}

void Emulator::require_interaction_allowed(const AccountId& actor,
                                           const AccountId& target) const {
  if (blocked_either_way(actor, target))
    throw PlatformError("interaction between '" + actor + "' and '" + target +
                        "' is blocked");
}

std::vector<AccountId> Emulator::extract_mentions(const std::string& text) const {
  std::vector<AccountId> mentions;
  std::size_t pos = 0;
  while ((pos = text.find('@', pos)) != std::string::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[end])) ||
            text[end] == '_'))
      ++end;
    std::string handle = text.substr(pos + 1, end - pos - 1);
    if (accounts_.count(handle) &&
        std::find(mentions.begin(), mentions.end(), handle) == mentions.end())
      mentions.push_back(handle);
    pos = end;
  }
  return mentions;
}

PlatformEvent& Emulator::append(EventKind kind, const AccountId& actor,
                                EventPayload payload) {
  PlatformEvent event;
  event.seq = static_cast<std::int64_t>(log_.size());
  event.episode = episode_;
  event.actor = actor;
  event.kind = kind;
  event.payload = std::move(payload);
  apply(event);
  log_.push_back(std::move(event));
  return log_.back();
}

void Emulator::apply(const PlatformEvent& event) {
  // Replay path materializes accounts on first sight; live ops validate
  // before reaching here.
  if (!accounts_.count(event.actor)) {
    accounts_[event.actor] = {};
    account_order_.push_back(event.actor);
  }
  switch (event.kind) {
    case EventKind::toot:
    case EventKind::reply:
    case EventKind::boost: {
      const auto& payload = std::get<TootPayload>(event.payload);
      Toot toot;
      toot.id = payload.id;
      toot.author = event.actor;
      toot.text = payload.text;
      toot.created_at = clock_.at_episode(event.episode);
      toot.episode = event.episode;
      toot.in_reply_to = payload.in_reply_to;
      toot.boost_of = payload.boost_of;
      toot.mentions = payload.mentions;
      toots_.push_back(std::move(toot));
      break;
    }
    case EventKind::favorite:
      favorites_.insert(
          {event.actor, std::get<TootTarget>(event.payload).toot});
      break;
    case EventKind::follow: {
      const auto& target = std::get<AccountTarget>(event.payload).target;
      if (!accounts_.count(target)) {
        accounts_[target] = {};
        account_order_.push_back(target);
      }
      follows_.insert({event.actor, target});
      break;
    }
    case EventKind::unfollow:
      follows_.erase({event.actor, std::get<AccountTarget>(event.payload).target});
      break;
    case EventKind::block: {
      const auto& target = std::get<AccountTarget>(event.payload).target;
      blocks_.insert({event.actor, target});
      follows_.erase({event.actor, target});
      follows_.erase({target, event.actor});
      break;
    }
    case EventKind::unblock:
      blocks_.erase({event.actor, std::get<AccountTarget>(event.payload).target});
      break;
    case EventKind::profile_update: {
      const auto& payload = std::get<ProfilePayload>(event.payload);
      auto& account = accounts_[event.actor];
      if (!payload.display_name.empty())
        account.display_name = payload.display_name;
      account.bio = payload.bio;
      break;
    }
  }
}

AccountId Emulator::ensure_account(const std::string& handle,
                                   const std::string& display_name,
                                   const std::string& bio) {
  if (handle.empty()) throw PlatformError("empty account handle");
  auto it = accounts_.find(handle);
  if (it != accounts_.end() && it->second.display_name == display_name &&
      it->second.bio == bio) {
    return handle;  // idempotent re-provisioning
  }
  if (it == accounts_.end()) {
    accounts_[handle] = {};
    account_order_.push_back(handle);
  }
  append(EventKind::profile_update, handle, ProfilePayload{display_name, bio});
  return handle;
}

Toot Emulator::post_toot(const AccountId& actor, const std::string& text) {
  require_account(actor);
  if (text.size() > kTootMaxChars)
    throw PlatformError("toot exceeds " + std::to_string(kTootMaxChars) +
                        " characters (got " + std::to_string(text.size()) + ")");
  if (text.empty()) throw PlatformError("toot with empty text");
  TootPayload payload;
  payload.id = static_cast<TootId>(toots_.size()) + 1;
  payload.text = text;
  payload.mentions = extract_mentions(text);
  append(EventKind::toot, actor, std::move(payload));
  return toots_.back();
}

Toot Emulator::reply(const AccountId& actor, TootId parent,
                     const std::string& text) {
  require_account(actor);
  const Toot& target = require_toot(parent);
  require_interaction_allowed(actor, target.author);
  if (text.size() > kTootMaxChars)
    throw PlatformError("toot exceeds " + std::to_string(kTootMaxChars) +
                        " characters (got " + std::to_string(text.size()) + ")");
  if (text.empty()) throw PlatformError("reply with empty text");
  TootPayload payload;
  payload.id = static_cast<TootId>(toots_.size()) + 1;
  payload.text = text;
  payload.in_reply_to = parent;
  payload.mentions = extract_mentions(text);
  append(EventKind::reply, actor, std::move(payload));
  return toots_.back();
}

Toot Emulator::boost(const AccountId& actor, TootId toot) {
  require_account(actor);
  const Toot* original = &require_toot(toot);
  if (original->boost_of) original = &require_toot(*original->boost_of);
  require_interaction_allowed(actor, original->author);
  TootPayload payload;
  payload.id = static_cast<TootId>(toots_.size()) + 1;
  payload.boost_of = original->id;
  append(EventKind::boost, actor, std::move(payload));
  return toots_.back();
}

void Emulator::favorite(const AccountId& actor, TootId toot) {
  require_account(actor);
  const Toot& target = require_toot(toot);
  require_interaction_allowed(actor, target.author);
  if (favorites_.count({actor, toot})) return;  // idempotent
  append(EventKind::favorite, actor, TootTarget{toot});
}

void Emulator::follow(const AccountId& actor, const AccountId& target) {
  require_account(actor);
  require_account(target);
  if (actor == target) throw PlatformError("cannot follow self");
  require_interaction_allowed(actor, target);
  if (follows_.count({actor, target})) return;  // idempotent
  append(EventKind::follow, actor, AccountTarget{target});
}

void Emulator::unfollow(const AccountId& actor, const AccountId& target) {
  require_account(actor);
  require_account(target);
  if (!follows_.count({actor, target})) return;  // idempotent
  append(EventKind::unfollow, actor, AccountTarget{target});
}

void Emulator::block(const AccountId& actor, const AccountId& target) {
  require_account(actor);
  require_account(target);
  if (actor == target) throw PlatformError("cannot block self");
  if (blocks_.count({actor, target})) return;  // idempotent
  append(EventKind::block, actor, AccountTarget{target});
}

void Emulator::unblock(const AccountId& actor, const AccountId& target) {
  require_account(actor);
  require_account(target);
  if (!blocks_.count({actor, target})) return;  // idempotent
  append(EventKind::unblock, actor, AccountTarget{target});
}

void Emulator::update_profile(const AccountId& actor, const std::string& bio) {
  require_account(actor);
  append(EventKind::profile_update, actor,
         ProfilePayload{accounts_.at(actor).display_name, bio});
}

std::vector<Toot> Emulator::home_timeline(const AccountId& actor, int limit) {
  require_account(actor);
  std::vector<Toot> timeline;
  for (auto it = toots_.rbegin();
       it != toots_.rend() && static_cast<int>(timeline.size()) < limit; ++it) {
    if (!follows_.count({actor, it->author})) continue;
    if (blocked_either_way(actor, it->author)) continue;
    if (it->boost_of) {
      const Toot& original = require_toot(*it->boost_of);
      if (blocked_either_way(actor, original.author)) continue;
    }
    timeline.push_back(*it);
  }
  return timeline;
}

bool Emulator::has_account(const AccountId& account) {
  return accounts_.count(account) > 0;
}

std::optional<Toot> Emulator::get_toot(TootId id) {
  if (id < 1 || id > static_cast<TootId>(toots_.size())) return std::nullopt;
  return toots_[static_cast<std::size_t>(id - 1)];
}

std::vector<PlatformEvent> Emulator::events_for_episode(int episode) const {
  std::vector<PlatformEvent> out;
  for (const auto& event : log_)
    if (event.episode == episode) out.push_back(event);
  return out;
}

FollowGraph Emulator::follow_graph() const {
  FollowGraph graph;
  graph.edges = follows_;
  return graph;
}

std::vector<AccountId> Emulator::accounts() const { return account_order_; }

std::string Emulator::display_name(const AccountId& account) const {
  auto it = accounts_.find(account);
  return it == accounts_.end() ? std::string() : it->second.display_name;
}

std::string Emulator::bio(const AccountId& account) const {
  auto it = accounts_.find(account);
  return it == accounts_.end() ? std::string() : it->second.bio;
}

std::size_t Emulator::favorite_count(TootId id) const {
  std::size_t n = 0;
  for (const auto& f : favorites_)
    if (f.second == id) ++n;
  return n;
}

void Emulator::replay(const std::vector<PlatformEvent>& events) {
  if (!log_.empty())
    throw PlatformError("replay requires an empty emulator");
  for (const auto& event : events) {
    if (event.seq != static_cast<std::int64_t>(log_.size()))
      throw PlatformError("event log has a gap at seq " +
                          std::to_string(event.seq));
    episode_ = event.episode;
    apply(event);
    log_.push_back(event);
  }
}

// ---------------------------------------------------------------------------
// Provisioning, follow graph, introductions
// ---------------------------------------------------------------------------

std::string handle_for(const std::string& agent_name) {
  std::string handle;
  for (char c : agent_name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      handle.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!handle.empty() && handle.back() != '_') {
      handle.push_back('_');
    }
  }
  while (!handle.empty() && handle.back() == '_') handle.pop_back();
  return handle;
}

std::map<std::string, AccountId> provision_accounts(
    PlatformClient& platform, const std::vector<AgentSpec>& specs) {
  std::map<std::string, AccountId> bindings;
  for (const auto& spec : specs) {
    std::string bio;
    if (spec.role == Role::candidate) {
      bio = "Candidate for mayor of Storhampton. Campaigning on " +
            spec.policy_proposal.value_or("");
    } else {
      bio = "Resident of Storhampton. Goal: " + spec.goal;
    }
    if (bio.size() > 480) bio.resize(480);
    bindings[spec.name] = platform.ensure_account(handle_for(spec.name),
                                                  spec.name, bio);
  }
  return bindings;
}

std::vector<std::pair<int, int>> generate_follow_edges(
    int n, const std::vector<int>& candidate_indices, const GraphParams& params,
    Pcg32& rng) {
  std::vector<bool> is_candidate(n, false);
  for (int c : candidate_indices) is_candidate[c] = true;

  std::vector<std::pair<int, int>> edges;
  // All agents follow each candidate (no self edges).
  for (int i = 0; i < n; ++i) {
    for (int c : candidate_indices) {
      if (i != c) edges.emplace_back(i, c);
    }
  }
  // Non-candidate pairs: one p1 draw per unordered pair for a reciprocal
  // connection; otherwise p2, per direction by default.
  for (int i = 0; i < n; ++i) {
    if (is_candidate[i]) continue;
    for (int j = i + 1; j < n; ++j) {
      if (is_candidate[j]) continue;
      if (rng.bernoulli(params.p1)) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      } else if (params.p2_single_draw_per_pair) {
        if (rng.bernoulli(params.p2)) edges.emplace_back(i, j);
      } else {
        if (rng.bernoulli(params.p2)) edges.emplace_back(i, j);
        if (rng.bernoulli(params.p2)) edges.emplace_back(j, i);
      }
    }
  }
  return edges;
}

FollowGraph init_follow_graph(PlatformClient& platform,
                              const std::vector<AccountId>& accounts,
                              const std::vector<int>& candidate_indices,
                              const GraphParams& params, Pcg32& rng) {
  auto edges = generate_follow_edges(static_cast<int>(accounts.size()),
                                     candidate_indices, params, rng);
  FollowGraph graph;
  for (const auto& [from, to] : edges) {
    platform.follow(accounts[from], accounts[to]);
    graph.edges.insert({accounts[from], accounts[to]});
  }
  return graph;
}

std::vector<Toot> post_introductions(
    PlatformClient& platform, LlmBackend& llm,
    const std::vector<IntroductionPrompt>& prompts) {
  std::vector<Toot> toots;
  toots.reserve(prompts.size());
  for (const auto& intro : prompts) {
    CompletionRequest request;
    request.kind = PromptKind::toot_content;
    request.agent_name = intro.agent_name;
    request.prompt_text = intro.prompt_text;
    request.max_chars = kTootMaxChars;
    toots.push_back(platform.post_toot(intro.account, llm.complete(request)));
  }
  return toots;
}

}  // namespace storsim
