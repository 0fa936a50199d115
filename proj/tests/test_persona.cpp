#include <doctest.h>

#include <cmath>
#include <map>

#include "storsim/errors.hpp"
#include "storsim/persona.hpp"
#include "storsim/sim_time.hpp"
#include "test_util.hpp"

using namespace storsim;
using storsim::testing::TempDir;
using storsim::testing::spit;

namespace {

SurveyDataset fixture_dataset() {
  SurveyDataset dataset;
  dataset.scoring = default_values_scoring();
  auto add = [&](std::string id, int age, std::string gender, int fill) {
    SurveyRespondent r;
    r.id = std::move(id);
    r.age = age;
    r.gender = std::move(gender);
    r.answers.assign(20, fill);
    dataset.respondents.push_back(std::move(r));
  };
  add("r1", 34, "female", 3);
  add("r2", 36, "female", 4);
  add("r3", 31, "female", 5);
  add("r4", 52, "male", 2);
  return dataset;
}

}  // namespace

TEST_CASE("scoring: constant responses score every value at that response") {
  std::vector<int> answers(20, 4);
  auto scores = score_survey_responses(answers, default_values_scoring());
  REQUIRE(scores.size() == 10);
  for (const auto& [value, score] : scores) CHECK(score == doctest::Approx(4.0));
}

TEST_CASE("scoring: benevolence mean over its two items") {
  // Default map sends items 9 and 19 (1-based) to benevolence.
  std::vector<int> answers(20, 1);
  answers[8] = 5;
  answers[18] = 3;
  auto scores = score_survey_responses(answers, default_values_scoring());
  std::map<std::string, double> by_value(scores.begin(), scores.end());
  CHECK(by_value.at("benevolence") == doctest::Approx(4.0));
  CHECK(by_value.at("self-direction") == doctest::Approx(1.0));
}

TEST_CASE("scoring: reverse-scored items are mirrored on the response scale") {
  auto scoring = default_values_scoring();
  scoring[8].reverse = true;  // benevolence item
  std::vector<int> answers(20, 1);
  answers[8] = 5;   // reversed: 7 - 5 = 2
  answers[18] = 3;
  auto scores = score_survey_responses(answers, scoring);
  std::map<std::string, double> by_value(scores.begin(), scores.end());
  CHECK(by_value.at("benevolence") == doctest::Approx(2.5));
}

TEST_CASE("scoring: permutation over same-value items does not matter") {
  std::vector<int> answers(20, 2);
  answers[3] = 6;   // achievement items: 4 and 14 (1-based)
  answers[13] = 1;
  auto a = score_survey_responses(answers, default_values_scoring());
  std::swap(answers[3], answers[13]);
  auto b = score_survey_responses(answers, default_values_scoring());
  CHECK(a == b);
}

TEST_CASE("scoring: missing and out-of-range responses are errors") {
  std::vector<int> nineteen(19, 3);
  CHECK_THROWS_AS(score_survey_responses(nineteen, default_values_scoring()),
                  ConfigError);
  std::vector<int> out_of_range(20, 3);
  out_of_range[5] = 7;
  CHECK_THROWS_AS(score_survey_responses(out_of_range, default_values_scoring()),
                  ConfigError);
}

TEST_CASE("sampling: a singleton demographic cell returns that respondent") {
  auto dataset = fixture_dataset();
  Pcg32 rng = derive_stream(1, "traits");
  TraitSet traits = sample_trait_set(dataset, 55, "male", rng);
  CHECK(traits.provenance == "sampled:r4");
  CHECK(traits.scheme == TraitScheme::schwartz);
  for (const auto& [value, score] : traits.scores)
    CHECK(score == doctest::Approx(2.0));
}

TEST_CASE("sampling: fixed seed picks the same respondent across runs") {
  auto dataset = fixture_dataset();
  Pcg32 a = derive_stream(99, "traits/x");
  Pcg32 b = derive_stream(99, "traits/x");
  auto ta = sample_trait_set(dataset, 33, "female", a);
  auto tb = sample_trait_set(dataset, 33, "female", b);
  CHECK(ta.provenance == tb.provenance);
  CHECK(ta.scores == tb.scores);
}

TEST_CASE("sampling: an empty cell is an error, never widened") {
  auto dataset = fixture_dataset();
  Pcg32 rng = derive_stream(1, "traits");
  CHECK_THROWS_WITH_AS(sample_trait_set(dataset, 75, "female", rng),
                       doctest::Contains("demographic cell"), ConfigError);
}

TEST_CASE("sampling: uniform over the cell within 3 sigma") {
  auto dataset = fixture_dataset();  // three female respondents in their 30s
  std::map<std::string, int> picks;
  const int n = 3000;
  for (int seed = 0; seed < n; ++seed) {
    Pcg32 rng = derive_stream(seed, "traits/freq");
    picks[sample_trait_set(dataset, 35, "female", rng).provenance] += 1;
  }
  double p = 1.0 / 3.0;
  double sigma = std::sqrt(p * (1 - p) / n);
  for (const auto& [id, count] : picks)
    CHECK(std::abs(static_cast<double>(count) / n - p) < 3 * sigma);
  CHECK(picks.size() == 3);
}

TEST_CASE("dataset loads from a delimited file and validates shape") {
  TempDir dir;
  std::string csv = "id,age,gender,a1,a2,a3,a4,a5,a6,a7,a8,a9,a10,a11,a12,a13,a14,a15,a16,a17,a18,a19,a20\n";
  csv += "p1,29,female,1,2,3,4,5,6,1,2,3,4,5,6,1,2,3,4,5,6,1,2\n";
  csv += "p2,47,male,6,5,4,3,2,1,6,5,4,3,2,1,6,5,4,3,2,1,6,5\n";
  spit(dir.path() / "values.csv", csv);
  auto dataset = load_survey_dataset((dir.path() / "values.csv").string());
  CHECK(dataset.respondents.size() == 2);
  CHECK(dataset.respondents[0].id == "p1");
  CHECK(dataset.respondents[1].age == 47);

  std::string bad = csv + "p3,30,male,1,2,3\n";
  spit(dir.path() / "bad.csv", bad);
  CHECK_THROWS_AS(load_survey_dataset((dir.path() / "bad.csv").string()),
                  ConfigError);
}

TEST_CASE("random_big5: deterministic given the stream state") {
  Pcg32 a = derive_stream(5, "traits/alice");
  Pcg32 b = derive_stream(5, "traits/alice");
  CHECK(random_big5(a).scores == random_big5(b).scores);
}

TEST_CASE("random_big5: canonical structure") {
  Pcg32 rng = derive_stream(5, "traits/bob");
  TraitSet traits = random_big5(rng);
  CHECK(traits.scheme == TraitScheme::big5);
  CHECK(traits.provenance == "random");
  REQUIRE(traits.scores.size() == 5);
  CHECK(traits.scores[0].first == "openness");
  CHECK(traits.scores[4].first == "neuroticism");
  traits.validate();
}

TEST_CASE("random_big5: trait means within 3 sigma of 5.5 over 1e4 draws") {
  Pcg32 rng = derive_stream(11, "traits/moments");
  const int n = 10000;
  std::vector<double> sums(5, 0.0);
  for (int i = 0; i < n; ++i) {
    TraitSet traits = random_big5(rng);
    for (int t = 0; t < 5; ++t) {
      REQUIRE(traits.scores[t].second >= 1.0);
      REQUIRE(traits.scores[t].second <= 10.0);
      sums[t] += traits.scores[t].second;
    }
  }
  // Var of U{1..10} = (10^2 - 1)/12 = 8.25
  double sigma = std::sqrt(8.25 / n);
  for (int t = 0; t < 5; ++t)
    CHECK(std::abs(sums[t] / n - 5.5) < 3 * sigma);
}

TEST_CASE("formative memories assemble anecdotes, context, and proposals") {
  ScriptedBackend llm(storsim::testing::default_rules());
  ScenarioConfig config = builtin_storhampton_scenario(Variant::control, 4);
  auto candidates = config.candidates();
  SimTime start = parse_sim_time(config.start_datetime);

  Pcg32 rng = derive_stream(1, "traits/fm");
  TraitSet traits = random_big5(rng);

  SUBCASE("scripted anecdotes appear verbatim, one memory per line") {
    auto result = generate_formative_memories(config.agents[2], traits,
                                              config.shared_context,
                                              candidates, llm, start);
    int anecdotes = 0;
    for (const auto& record : result.memories) {
      if (record.text == "I grew up near the Avonlea River docks." ||
          record.text == "One summer I worked double shifts at the textile mill." ||
          record.text == "I still remember the flood of '09 and the cleanup after.")
        ++anecdotes;
    }
    CHECK(anecdotes == 3);
    CHECK(result.backstory.find("lived in Storhampton") != std::string::npos);
  }

  SUBCASE("every shared-context block becomes a formative memory") {
    auto result = generate_formative_memories(config.agents[2], traits,
                                              config.shared_context,
                                              candidates, llm, start);
    REQUIRE(config.shared_context.size() == 4);
    for (const auto& block : config.shared_context) {
      bool found = false;
      for (const auto& record : result.memories) found |= record.text == block;
      CHECK(found);
    }
  }

  SUBCASE("candidates remember their own policy proposal") {
    auto result = generate_formative_memories(config.agents[0], traits,
                                              config.shared_context,
                                              candidates, llm, start);
    bool found = false;
    for (const auto& record : result.memories)
      found |= record.text.find(*config.agents[0].policy_proposal) !=
               std::string::npos;
    CHECK(found);
  }

  SUBCASE("timestamps precede simulation start and are totally ordered") {
    auto result = generate_formative_memories(config.agents[2], traits,
                                              config.shared_context,
                                              candidates, llm, start);
    SimTime previous = std::numeric_limits<SimTime>::min();
    for (const auto& record : result.memories) {
      CHECK(record.timestamp < start);
      CHECK(record.timestamp > previous);
      previous = record.timestamp;
      CHECK(record.has_tag(MemoryTag::formative));
    }
    CHECK(!result.memories.empty());
  }

  SUBCASE("bit-reproducible for identical inputs") {
    ScriptedBackend llm2(storsim::testing::default_rules());
    auto a = generate_formative_memories(config.agents[2], traits,
                                         config.shared_context, candidates,
                                         llm, start);
    auto b = generate_formative_memories(config.agents[2], traits,
                                         config.shared_context, candidates,
                                         llm2, start);
    REQUIRE(a.memories.size() == b.memories.size());
    for (std::size_t i = 0; i < a.memories.size(); ++i) {
      CHECK(a.memories[i].text == b.memories[i].text);
      CHECK(a.memories[i].timestamp == b.memories[i].timestamp);
    }
  }
}
