#include <doctest.h>

#include <cmath>

#include "storsim/measurement.hpp"
#include "test_util.hpp"

using namespace storsim;

namespace {

std::vector<CandidateInfo> ticket() {
  return {{"Bill Fredrickson", "jobs"}, {"Bradley Carter", "environment"}};
}

AgentState poll_agent(const std::string& name = "Ada Quine") {
  AgentState agent;
  agent.spec.name = name;
  agent.spec.gender = "female";
  agent.spec.age = 33;
  agent.spec.goal = "vote";
  Pcg32 rng = derive_stream(1, "traits/" + name);
  agent.traits = random_big5(rng);
  return agent;
}

}  // namespace

TEST_CASE("parse_vote matches names case-insensitively, whole word") {
  auto candidates = ticket();
  CHECK(parse_vote("bill", candidates) == "Bill Fredrickson");
  CHECK(parse_vote("BRADLEY!", candidates) == "Bradley Carter");
  CHECK(parse_vote("I think Bradley Carter!", candidates) == "Bradley Carter");
  CHECK(parse_vote("Fredrickson", candidates) == "Bill Fredrickson");
  CHECK(parse_vote("Voting for bill fredrickson.", candidates) ==
        "Bill Fredrickson");
}

TEST_CASE("parse_vote: ambiguity, absence, and substrings yield undecided") {
  auto candidates = ticket();
  CHECK(parse_vote("Bill or Bradley", candidates) == kUndecided);
  CHECK(parse_vote("", candidates) == kUndecided);
  CHECK(parse_vote("neither", candidates) == kUndecided);
  CHECK(parse_vote("I saw a Billboard today", candidates) == kUndecided);
  CHECK(parse_vote("Mondale", candidates) == kUndecided);
}

TEST_CASE("favorability parsing extracts the first integer in range") {
  CHECK(parse_favorability("7") == 7);
  CHECK(parse_favorability("I'd say 10/10") == 10);
  CHECK(parse_favorability("rating: 1.") == 1);
  CHECK(parse_favorability("eleven") == std::nullopt);
  CHECK(parse_favorability("") == std::nullopt);
  CHECK(parse_favorability("0") == std::nullopt);
  CHECK(parse_favorability("11") == std::nullopt);
  CHECK(parse_favorability("100") == std::nullopt);
}

TEST_CASE("poll_vote parses scripted answers; 'neither' stays undecided") {
  auto rules = storsim::testing::default_rules();
  ScriptedBackend llm(rules);
  AgentState agent = poll_agent();
  auto candidates = ticket();
  CHECK(poll_vote(agent, candidates, llm).vote == "Bill Fredrickson");
  CHECK(poll_vote(agent, candidates, llm).vote == "Bradley Carter");
  auto third = poll_vote(agent, candidates, llm);
  CHECK(third.vote == kUndecided);
  CHECK_FALSE(third.failed);
}

TEST_CASE("favorability poll retries once, then reports missing") {
  auto rules = storsim::testing::default_rules();
  ScriptedRule eleven;
  eleven.kind = PromptKind::favorability_poll;
  eleven.agent = "Ada Quine";
  eleven.responses = {"eleven", "eleven"};
  rules.insert(rules.begin(), eleven);
  ScriptedBackend llm(rules);

  AgentState agent = poll_agent();
  CHECK(poll_favorability(agent, ticket()[0], llm) == std::nullopt);
  int polls = 0;
  for (const auto& entry : llm.transcript())
    if (entry.request.kind == PromptKind::favorability_poll) ++polls;
  CHECK(polls == 2);

  AgentState other = poll_agent("Someone Else");
  CHECK(poll_favorability(other, ticket()[0], llm) == 7);
}

TEST_CASE("survey_agent bundles the vote and both favorability answers") {
  ScriptedBackend llm(storsim::testing::default_rules());
  AgentState agent = poll_agent();
  SurveyRecord record = survey_agent(agent, ticket(), llm, 5);
  CHECK(record.episode == 5);
  CHECK(record.agent == "Ada Quine");
  CHECK(record.vote == "Bill Fredrickson");
  REQUIRE(record.favorability.size() == 2);
  CHECK(record.favorability.at("Bill Fredrickson") == 7);
  CHECK(record.favorability.at("Bradley Carter") == 5);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

std::vector<SurveyRecord> hand_count_records() {
  std::vector<SurveyRecord> records;
  for (int i = 0; i < 20; ++i) {
    SurveyRecord record;
    record.episode = 3;
    record.agent = "Voter " + std::to_string(i);
    if (i < 12)
      record.vote = "Bill Fredrickson";
    else if (i < 18)
      record.vote = "Bradley Carter";
    else
      record.vote = kUndecided;
    record.favorability["Bill Fredrickson"] = 7;
    record.favorability["Bradley Carter"] = 7;
    records.push_back(record);
  }
  return records;
}

std::vector<AgentSpec> voter_specs(int n) {
  std::vector<AgentSpec> specs;
  for (int i = 0; i < n; ++i) {
    AgentSpec spec;
    spec.name = "Voter " + std::to_string(i);
    spec.role = Role::voter;
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

TEST_CASE("aggregate reproduces the 12/6/2 hand count") {
  auto records = hand_count_records();
  AnalyticsSnapshot snapshot =
      aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), voter_specs(20),
                AnalyticsFlags{});
  REQUIRE(snapshot.vote_share.size() == 3);
  CHECK(snapshot.vote_share[0].first == "Bill Fredrickson");
  CHECK(snapshot.vote_share[0].second == doctest::Approx(0.60));
  CHECK(snapshot.vote_share[1].second == doctest::Approx(0.30));
  CHECK(snapshot.vote_share[2].first == kUndecided);
  CHECK(snapshot.vote_share[2].second == doctest::Approx(0.10));
  CHECK(snapshot.mean_favorability.at("Bill Fredrickson") ==
        doctest::Approx(7.0));
  CHECK(snapshot.mean_favorability.at("Bradley Carter") ==
        doctest::Approx(7.0));
}

TEST_CASE("vote shares sum to one within 1e-9") {
  auto records = hand_count_records();
  AnalyticsSnapshot snapshot =
      aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), voter_specs(20),
                AnalyticsFlags{});
  double sum = 0.0;
  for (const auto& [name, share] : snapshot.vote_share) sum += share;
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("an empty episode has all-zero activity counts") {
  AnalyticsSnapshot snapshot =
      aggregate(hand_count_records(), 3, {}, FollowGraph{}, {}, ticket(),
                voter_specs(20), AnalyticsFlags{});
  for (const auto& [kind, count] : snapshot.activity_counts) CHECK(count == 0);
  CHECK(snapshot.activity_counts.size() == kEventKindCount);
}

TEST_CASE("missing favorability values are ignored in the mean") {
  auto records = hand_count_records();
  records[0].favorability["Bill Fredrickson"] = std::nullopt;
  records[1].favorability["Bill Fredrickson"] = 1;
  AnalyticsSnapshot snapshot =
      aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), voter_specs(20),
                AnalyticsFlags{});
  // 18 sevens and one 1 over 19 answering agents
  CHECK(snapshot.mean_favorability.at("Bill Fredrickson") ==
        doctest::Approx((18 * 7.0 + 1.0) / 19.0));
}

TEST_CASE("candidate exclusion flags shape the vote-share denominator") {
  auto records = hand_count_records();
  auto specs = voter_specs(20);
  specs[0].role = Role::candidate;  // voted Bill
  specs[19].role = Role::malicious; // voted undecided

  AnalyticsFlags flags;  // default: exclude candidates, include malicious
  AnalyticsSnapshot snapshot =
      aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), specs, flags);
  CHECK(snapshot.vote_share[0].second == doctest::Approx(11.0 / 19.0));

  flags.vote_share_includes_candidates = true;
  snapshot = aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), specs, flags);
  CHECK(snapshot.vote_share[0].second == doctest::Approx(12.0 / 20.0));

  flags.vote_share_includes_candidates = false;
  flags.vote_share_includes_malicious = false;
  snapshot = aggregate(records, 3, {}, FollowGraph{}, {}, ticket(), specs, flags);
  CHECK(snapshot.vote_share[2].second == doctest::Approx(1.0 / 18.0));
}

TEST_CASE("candidate mentions are counted from fresh toot text") {
  std::vector<PlatformEvent> events;
  PlatformEvent toot;
  toot.seq = 0;
  toot.episode = 3;
  toot.actor = "glenn";
  toot.kind = EventKind::toot;
  toot.payload = TootPayload{1, "Vote Bill Fredrickson for jobs!", {}, {}, {}};
  events.push_back(toot);
  PlatformEvent boost = toot;
  boost.seq = 1;
  boost.kind = EventKind::boost;
  boost.payload = TootPayload{2, "", {}, TootId{1}, {}};
  events.push_back(boost);

  AnalyticsSnapshot snapshot =
      aggregate(hand_count_records(), 3, events, FollowGraph{}, {"glenn"},
                ticket(), voter_specs(20), AnalyticsFlags{});
  CHECK(snapshot.mention_counts.at("Bill Fredrickson") == 1);
  CHECK(snapshot.mention_counts.at("Bradley Carter") == 0);
  CHECK(snapshot.activity_counts.at("toot") == 1);
  CHECK(snapshot.activity_counts.at("boost") == 1);
  CHECK(snapshot.active_accounts.count("glenn") == 1);
}

// ---------------------------------------------------------------------------
// Parser totality fuzz
// ---------------------------------------------------------------------------

TEST_CASE("poll parsers are total over fuzzed text") {
  auto candidates = ticket();
  Pcg32 rng = derive_stream(123, "fuzz/polls");
  const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyz 0123456789.!?-/\nBill Bradley neither";
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    int length = static_cast<int>(rng.uniform_below(60));
    for (int c = 0; c < length; ++c)
      text.push_back(
          alphabet[rng.uniform_below(static_cast<std::uint32_t>(alphabet.size()))]);
    std::string vote = parse_vote(text, candidates);
    CHECK((vote == kUndecided || vote == "Bill Fredrickson" ||
           vote == "Bradley Carter"));
    auto favorability = parse_favorability(text);
    if (favorability) {
      CHECK(*favorability >= 1);
      CHECK(*favorability <= 10);
    }
  }
}
