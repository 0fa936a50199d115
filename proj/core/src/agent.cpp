#include "storsim/agent.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "storsim/errors.hpp"
#include "storsim/prompts.hpp"

namespace storsim {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::post: return "post";
    case ActionKind::reply: return "reply";
    case ActionKind::boost: return "boost";
    case ActionKind::favorite: return "favorite";
    case ActionKind::follow: return "follow";
    case ActionKind::unfollow: return "unfollow";
    case ActionKind::block: return "block";
    case ActionKind::unblock: return "unblock";
    case ActionKind::update_profile: return "update_profile";
    case ActionKind::do_nothing: return "do_nothing";
  }
  return "do_nothing";
}

std::string AgentState::persona_header() const {
  std::ostringstream out;
  out << "Name: " << spec.name << " (" << spec.gender << ", " << spec.age
      << " years old)\n";
  out << "Goal: " << spec.goal << "\n";
  out << "Personality: " << traits.summary();
  if (spec.role == Role::candidate && spec.policy_proposal)
    out << "\nCampaign platform: " << *spec.policy_proposal;
  return out.str();
}

// ---------------------------------------------------------------------------
// Opinion and plan components
// ---------------------------------------------------------------------------

namespace {

std::string bullets(const std::vector<MemoryRecord>& records) {
  if (records.empty()) return "- (nothing relevant)";
  std::ostringstream out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out << "\n";
    out << "- " << records[i].text;
  }
  return out.str();
}

using prompts::substitute;

}  // namespace

std::string opinion_on_candidate(AgentState& state,
                                 const CandidateInfo& candidate,
                                 LlmBackend& llm, SimTime now) {
  auto cached = state.opinions.find(candidate.name);
  if (cached != state.opinions.end() &&
      cached->second.memory_count == state.memories.size()) {
    return cached->second.text;
  }

  auto relevant = retrieve_memories(
      state.memories, candidate.name + " " + candidate.proposal, 10, now);

  CompletionRequest request;
  request.kind = PromptKind::opinion;
  request.agent_name = state.spec.name;
  request.prompt_text = substitute(
      substitute(substitute(substitute(prompts::kOpinion, "{persona}",
                                       state.persona_header()),
                            "{memories}", bullets(relevant)),
                 "{candidate}", candidate.name),
      "{name}", state.spec.name);
  request.max_chars = 2000;
  std::string opinion = llm.complete(request);
  state.opinions[candidate.name] = {opinion, state.memories.size()};
  return opinion;
}

std::string current_opinion_on_candidate(
    AgentState& state, const CandidateInfo& candidate,
    const std::vector<MemoryRecord>& recent_observations, LlmBackend& llm,
    SimTime now) {
  std::string general = opinion_on_candidate(state, candidate, llm, now);

  CompletionRequest request;
  request.kind = PromptKind::current_opinion;
  request.agent_name = state.spec.name;
  request.prompt_text = substitute(
      substitute(substitute(substitute(substitute(prompts::kCurrentOpinion,
                                                  "{persona}",
                                                  state.persona_header()),
                                       "{opinion}", general),
                            "{recent}", bullets(recent_observations)),
                 "{candidate}", candidate.name),
      "{name}", state.spec.name);
  request.max_chars = 2000;
  return llm.complete(request);
}

namespace {

std::string plan_impl(AgentState& state,
                      const std::vector<CandidateInfo>& candidates,
                      LlmBackend& llm, SimTime now, PromptKind kind) {
  std::string favored, opponent;
  if (kind == PromptKind::perception_plan) {
    favored = state.spec.name;
    for (const auto& candidate : candidates)
      if (candidate.name != state.spec.name) opponent = candidate.name;
  } else {
    // The malicious goal names the favored candidate; match against the
    // ticket and treat the other as the opponent.
    for (const auto& candidate : candidates) {
      if (state.spec.goal.find(candidate.name) != std::string::npos)
        favored = candidate.name;
    }
    if (favored.empty()) favored = candidates.front().name;
    for (const auto& candidate : candidates)
      if (candidate.name != favored) opponent = candidate.name;
  }

  std::string query;
  for (const auto& candidate : candidates) query += candidate.name + " ";
  query += "election campaign voters opinion";
  auto evaluations = retrieve_memories(state.memories, query, 10, now);

  const char* tmpl = kind == PromptKind::perception_plan
                         ? prompts::kPerceptionPlan
                         : prompts::kMaliciousPlan;
  CompletionRequest request;
  request.kind = kind;
  request.agent_name = state.spec.name;
  request.prompt_text = substitute(
      substitute(substitute(substitute(substitute(tmpl, "{persona}",
                                                  state.persona_header()),
                                       "{memories}", bullets(evaluations)),
                            "{favored}", favored),
                 "{opponent}", opponent),
      "{name}", state.spec.name);
  request.max_chars = 2000;
  std::string plan = llm.complete(request);
  state.memories.append(
      {now, "Plan: " + plan, static_cast<std::uint8_t>(MemoryTag::observation),
       0.0});
  return plan;
}

}  // namespace

std::string plan_public_perception(AgentState& state,
                                   const std::vector<CandidateInfo>& candidates,
                                   LlmBackend& llm, SimTime now) {
  if (state.spec.role != Role::candidate)
    throw ConfigError("plan_public_perception requires a candidate agent, '" +
                      state.spec.name + "' is a " + to_string(state.spec.role));
  return plan_impl(state, candidates, llm, now, PromptKind::perception_plan);
}

std::string plan_malicious(AgentState& state,
                           const std::vector<CandidateInfo>& candidates,
                           LlmBackend& llm, SimTime now) {
  if (state.spec.role != Role::malicious)
    throw ConfigError("plan_malicious requires a malicious agent, '" +
                      state.spec.name + "' is a " + to_string(state.spec.role));
  return plan_impl(state, candidates, llm, now, PromptKind::malicious_plan);
}

// ---------------------------------------------------------------------------
// Action grammar
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::optional<TootId> parse_toot_id(const std::string& token) {
  std::string digits = token;
  if (!digits.empty() && digits.front() == '#') digits.erase(0, 1);
  if (digits.empty() ||
      !std::all_of(digits.begin(), digits.end(),
                   [](unsigned char c) { return std::isdigit(c); }))
    return std::nullopt;
  try {
    return std::stoll(digits);
  } catch (...) {
    return std::nullopt;
  }
}

std::string strip_at(std::string handle) {
  if (!handle.empty() && handle.front() == '@') handle.erase(0, 1);
  return handle;
}

}  // namespace

std::vector<AppAction> parse_app_actions(const std::string& response,
                                         const std::set<TootId>& feed_ids,
                                         const std::set<AccountId>& known_accounts,
                                         int max_actions) {
  std::vector<AppAction> actions;
  std::istringstream lines(response);
  std::string raw;
  while (std::getline(lines, raw) &&
         static_cast<int>(actions.size()) < max_actions) {
    std::string line = trim(raw);
    if (line.empty()) continue;

    if (line == "do_nothing" || line == "do_nothing.") {
      actions.push_back({ActionKind::do_nothing, 0, "", ""});
      continue;
    }

    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string verb = trim(line.substr(0, colon));
    std::transform(verb.begin(), verb.end(), verb.begin(), ::tolower);
    std::string argument = trim(line.substr(colon + 1));

    if (verb == "post") {
      if (argument.empty()) continue;
      actions.push_back({ActionKind::post, 0, "", argument});
    } else if (verb == "reply") {
      auto space = argument.find(' ');
      if (space == std::string::npos) continue;
      auto id = parse_toot_id(argument.substr(0, space));
      std::string text = trim(argument.substr(space + 1));
      if (!id || text.empty() || !feed_ids.count(*id)) continue;
      actions.push_back({ActionKind::reply, *id, "", text});
    } else if (verb == "boost" || verb == "favorite" || verb == "favourite") {
      auto id = parse_toot_id(argument);
      if (!id || !feed_ids.count(*id)) continue;
      actions.push_back({verb == "boost" ? ActionKind::boost
                                         : ActionKind::favorite,
                         *id, "", ""});
    } else if (verb == "follow" || verb == "unfollow" || verb == "block" ||
               verb == "unblock") {
      std::string target = strip_at(argument);
      if (!known_accounts.count(target)) continue;
      ActionKind kind = verb == "follow"     ? ActionKind::follow
                        : verb == "unfollow" ? ActionKind::unfollow
                        : verb == "block"    ? ActionKind::block
                                             : ActionKind::unblock;
      actions.push_back({kind, 0, target, ""});
    } else if (verb == "profile") {
      if (argument.empty()) continue;
      actions.push_back({ActionKind::update_profile, 0, "", argument});
    }
  }
  return actions;
}

// ---------------------------------------------------------------------------
// App sessions
// ---------------------------------------------------------------------------

FeedView render_feed(PlatformClient& platform, const AgentState& state,
                     int feed_window) {
  FeedView view;
  view.toots = platform.home_timeline(state.account, feed_window);
  std::ostringstream out;
  if (view.toots.empty()) out << "(the feed is empty)";
  for (std::size_t i = 0; i < view.toots.size(); ++i) {
    const Toot& toot = view.toots[i];
    if (i) out << "\n";
    view.toot_ids.insert(toot.id);
    if (toot.boost_of) {
      out << "[#" << toot.id << "] @" << toot.author << " boosted #"
          << *toot.boost_of;
      if (auto original = platform.get_toot(*toot.boost_of)) {
        out << " by @" << original->author << ": " << original->text;
        view.toot_ids.insert(original->id);
      }
    } else if (toot.in_reply_to) {
      out << "[#" << toot.id << "] @" << toot.author << " replied to #"
          << *toot.in_reply_to << ": " << toot.text;
    } else {
      out << "[#" << toot.id << "] @" << toot.author << ": " << toot.text;
    }
  }
  view.rendered = out.str();
  return view;
}

SessionDecision decide_app_session(AgentState& state, PlatformClient& platform,
                                   const std::vector<CandidateInfo>& candidates,
                                   LlmBackend& llm, Pcg32& rng, SimTime now,
                                   const SessionOptions& options) {
  (void)rng;  // decisions are LLM-driven; the stream is reserved for ablations
  SessionDecision decision;
  TeeLlm tee(llm, decision.exchanges);

  FeedView feed = render_feed(platform, state, options.feed_window);
  for (const Toot& toot : feed.toots) {
    if (toot.id <= state.last_seen_toot) continue;
    std::string text = toot.text;
    if (toot.boost_of) {
      if (auto original = platform.get_toot(*toot.boost_of))
        text = "boost of @" + original->author + ": " + original->text;
    }
    state.memories.append({now, "Saw on Storhampton.social @" + toot.author +
                                    ": " + text,
                           MemoryTag::observation | MemoryTag::platform, 0.0});
    state.last_seen_toot = std::max(state.last_seen_toot, toot.id);
  }

  // Role-specific deliberation context.
  std::string context;
  if (state.spec.role == Role::candidate) {
    context = "Campaign plan: " +
              plan_public_perception(state, candidates, tee, now) + "\n";
  } else if (state.spec.role == Role::malicious) {
    context = "Plan: " + plan_malicious(state, candidates, tee, now) + "\n";
  } else {
    auto recent = state.memories.recent(
        5, static_cast<std::uint8_t>(MemoryTag::observation));
    std::ostringstream opinions;
    for (const auto& candidate : candidates) {
      opinions << "Current opinion on " << candidate.name << ": "
               << current_opinion_on_candidate(state, candidate, recent, tee,
                                               now)
               << "\n";
    }
    context = opinions.str();
  }

  std::string usage;
  if (!options.usage_instructions.empty()) {
    std::ostringstream out;
    out << "How Mastodon works:\n";
    for (const auto& instruction : options.usage_instructions)
      out << "- " << instruction << "\n";
    usage = out.str();
  }

  std::set<AccountId> known;
  for (const auto& toot : feed.toots) known.insert(toot.author);
  for (const auto& account : options.known_accounts) known.insert(account);

  CompletionRequest request;
  request.kind = PromptKind::app_action;
  request.agent_name = state.spec.name;
  request.prompt_text = substitute(
      substitute(substitute(substitute(substitute(prompts::kAppAction,
                                                  "{persona}",
                                                  state.persona_header()),
                                       "{usage}", usage),
                            "{context}", context),
                 "{feed}", feed.rendered),
      "{name}", state.spec.name);
  request.max_chars = 2000;

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string response = tee.complete(request);
    decision.actions = parse_app_actions(response, feed.toot_ids, known,
                                         options.max_actions);
    if (!decision.actions.empty()) break;
  }
  if (decision.actions.empty())
    decision.actions.push_back({ActionKind::do_nothing, 0, "", ""});
  return decision;
}

std::vector<std::string> apply_app_actions(AgentState& state,
                                           PlatformClient& platform,
                                           const std::vector<AppAction>& actions,
                                           SimTime now) {
  std::vector<std::string> observations;
  for (const AppAction& action : actions) {
    std::string observation;
    try {
      switch (action.kind) {
        case ActionKind::post: {
          std::string text = action.content;
          if (text.size() > kTootMaxChars) text.resize(kTootMaxChars);
          Toot toot = platform.post_toot(state.account, text);
          observation = "I posted: \"" + toot.text + "\"";
          break;
        }
        case ActionKind::reply: {
          std::string text = action.content;
          if (text.size() > kTootMaxChars) text.resize(kTootMaxChars);
          Toot toot = platform.reply(state.account, action.target_toot, text);
          observation = "I replied to #" + std::to_string(action.target_toot) +
                        ": \"" + toot.text + "\"";
          break;
        }
        case ActionKind::boost:
          platform.boost(state.account, action.target_toot);
          observation = "I boosted toot #" + std::to_string(action.target_toot);
          break;
        case ActionKind::favorite:
          platform.favorite(state.account, action.target_toot);
          observation =
              "I favorited toot #" + std::to_string(action.target_toot);
          break;
        case ActionKind::follow:
          platform.follow(state.account, action.target_account);
          observation = "I followed @" + action.target_account;
          break;
        case ActionKind::unfollow:
          platform.unfollow(state.account, action.target_account);
          observation = "I unfollowed @" + action.target_account;
          break;
        case ActionKind::block:
          platform.block(state.account, action.target_account);
          observation = "I blocked @" + action.target_account;
          break;
        case ActionKind::unblock:
          platform.unblock(state.account, action.target_account);
          observation = "I unblocked @" + action.target_account;
          break;
        case ActionKind::update_profile: {
          std::string bio = action.content;
          if (bio.size() > kTootMaxChars) bio.resize(kTootMaxChars);
          platform.update_profile(state.account, bio);
          observation = "I updated my profile bio";
          break;
        }
        case ActionKind::do_nothing:
          observation = "I closed the app without acting";
          break;
      }
    } catch (const PlatformError& error) {
      observation = std::string("My ") + to_string(action.kind) +
                    " failed: " + error.what();
    }
    state.memories.append({now, observation,
                           MemoryTag::observation | MemoryTag::platform, 0.0});
    observations.push_back(std::move(observation));
  }
  return observations;
}

std::vector<AppAction> run_app_session(AgentState& state,
                                       PlatformClient& platform,
                                       const std::vector<CandidateInfo>& candidates,
                                       LlmBackend& llm, Pcg32& rng, SimTime now,
                                       const SessionOptions& options) {
  SessionDecision decision =
      decide_app_session(state, platform, candidates, llm, rng, now, options);
  apply_app_actions(state, platform, decision.actions, now);
  return decision.actions;
}

}  // namespace storsim
