#include "storsim/measurement.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "storsim/errors.hpp"
#include "storsim/prompts.hpp"

namespace storsim {

namespace {

std::set<std::string> word_set(const std::string& text) {
  std::set<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      words.insert(current);
      current.clear();
    }
  }
  if (!current.empty()) words.insert(current);
  return words;
}

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return text;
}

bool name_in_words(const std::set<std::string>& words,
                   const CandidateInfo& candidate) {
  return words.count(lower(candidate.first_name())) > 0 ||
         words.count(lower(candidate.last_name())) > 0;
}

}  // namespace

std::string parse_vote(const std::string& text,
                       const std::vector<CandidateInfo>& candidates) {
  std::set<std::string> words = word_set(text);
  const CandidateInfo* matched = nullptr;
  int matches = 0;
  for (const auto& candidate : candidates) {
    if (name_in_words(words, candidate)) {
      ++matches;
      matched = &candidate;
    }
  }
  return matches == 1 ? matched->name : kUndecided;
}

bool mentions_candidate(const std::string& text, const CandidateInfo& candidate) {
  return name_in_words(word_set(text), candidate);
}

std::optional<int> parse_favorability(const std::string& text) {
  std::string digits;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits.push_back(text[i]);
      continue;
    }
    if (!digits.empty()) {
      // First integer token decides; in range or not.
      if (digits.size() <= 2) {
        int value = std::stoi(digits);
        if (value >= 1 && value <= 10) return value;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

namespace {

std::string survey_context(const AgentState& state) {
  std::ostringstream out;
  out << state.persona_header() << "\n";
  for (const auto& [candidate, cached] : state.opinions)
    out << "Opinion on " << candidate << ": " << cached.text << "\n";
  return out.str();
}

}  // namespace

VotePollResult poll_vote(AgentState& state,
                         const std::vector<CandidateInfo>& candidates,
                         LlmBackend& llm) {
  CompletionRequest request;
  request.kind = PromptKind::vote_poll;
  request.agent_name = state.spec.name;
  request.prompt_text = prompts::substitute(
      prompts::substitute(prompts::kVotePoll, "{context}",
                          survey_context(state)),
      "{name}", state.spec.name);
  request.max_chars = 200;
  try {
    std::string answer = llm.complete(request);
    return {parse_vote(answer, candidates), false};
  } catch (const BackendError&) {
    return {kUndecided, true};
  }
}

std::optional<int> poll_favorability(AgentState& state,
                                     const CandidateInfo& candidate,
                                     LlmBackend& llm) {
  CompletionRequest request;
  request.kind = PromptKind::favorability_poll;
  request.agent_name = state.spec.name;
  request.prompt_text = prompts::substitute(
      prompts::substitute(
          prompts::substitute(prompts::kFavorabilityPoll, "{context}",
                              survey_context(state)),
          "{candidate}", candidate.name),
      "{name}", state.spec.name);
  request.max_chars = 200;

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string answer;
    try {
      answer = llm.complete(request);
    } catch (const BackendError&) {
      return std::nullopt;
    }
    if (auto value = parse_favorability(answer)) return value;
  }
  return std::nullopt;
}

SurveyRecord survey_agent(AgentState& state,
                          const std::vector<CandidateInfo>& candidates,
                          LlmBackend& llm, int episode) {
  SurveyRecord record;
  record.episode = episode;
  record.agent = state.spec.name;
  VotePollResult vote = poll_vote(state, candidates, llm);
  record.vote = vote.vote;
  record.poll_failed = vote.failed;
  for (const auto& candidate : candidates)
    record.favorability[candidate.name] =
        poll_favorability(state, candidate, llm);
  return record;
}

AnalyticsSnapshot aggregate(const std::vector<SurveyRecord>& records,
                            int episode,
                            const std::vector<PlatformEvent>& events,
                            const FollowGraph& graph,
                            const std::set<AccountId>& active_accounts,
                            const std::vector<CandidateInfo>& candidates,
                            const std::vector<AgentSpec>& agents,
                            const AnalyticsFlags& flags) {
  AnalyticsSnapshot snapshot;
  snapshot.episode = episode;

  auto role_of = [&](const std::string& name) {
    for (const auto& spec : agents)
      if (spec.name == name) return spec.role;
    return Role::voter;
  };
  auto included = [&](const SurveyRecord& record) {
    Role role = role_of(record.agent);
    if (role == Role::candidate && !flags.vote_share_includes_candidates)
      return false;
    if (role == Role::malicious && !flags.vote_share_includes_malicious)
      return false;
    return record.episode == episode;
  };

  std::map<std::string, int> counts;
  int total = 0;
  std::map<std::string, std::pair<double, int>> favorability_acc;
  for (const auto& record : records) {
    if (!included(record)) continue;
    ++total;
    counts[record.vote] += 1;
    for (const auto& [candidate, value] : record.favorability) {
      if (value) {
        favorability_acc[candidate].first += *value;
        favorability_acc[candidate].second += 1;
      }
    }
  }

  for (const auto& candidate : candidates) {
    double share = total > 0 ? static_cast<double>(counts[candidate.name]) /
                                   total
                             : 0.0;
    snapshot.vote_share.emplace_back(candidate.name, share);
  }
  snapshot.vote_share.emplace_back(
      kUndecided,
      total > 0 ? static_cast<double>(counts[kUndecided]) / total : 1.0);

  for (const auto& candidate : candidates) {
    const auto& acc = favorability_acc[candidate.name];
    snapshot.mean_favorability[candidate.name] =
        acc.second > 0 ? acc.first / acc.second : 0.0;
  }

  for (int i = 0; i < kEventKindCount; ++i)
    snapshot.activity_counts[to_string(static_cast<EventKind>(i))] = 0;
  for (const auto& candidate : candidates)
    snapshot.mention_counts[candidate.name] = 0;
  for (const auto& event : events) {
    snapshot.activity_counts[to_string(event.kind)] += 1;
    if (event.kind == EventKind::toot || event.kind == EventKind::reply) {
      const auto& payload = std::get<TootPayload>(event.payload);
      for (const auto& candidate : candidates) {
        if (mentions_candidate(payload.text, candidate))
          snapshot.mention_counts[candidate.name] += 1;
      }
    }
  }

  snapshot.graph_edges.assign(graph.edges.begin(), graph.edges.end());
  snapshot.active_accounts = active_accounts;
  return snapshot;
}

}  // namespace storsim
