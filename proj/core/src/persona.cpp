#include "storsim/persona.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "storsim/errors.hpp"
#include "storsim/llm.hpp"
#include "storsim/prompts.hpp"

namespace storsim {

std::string TraitSet::summary() const {
  int max = scheme == TraitScheme::big5 ? kBig5Max : kValuesResponseMax;
  std::ostringstream out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i) out << ", ";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", scores[i].second);
    out << scores[i].first << ": " << buf << "/" << max;
  }
  return out.str();
}

void TraitSet::validate() const {
  if (scheme == TraitScheme::big5) {
    if (scores.size() != kBig5Traits.size())
      throw ConfigError("big5 trait set must have exactly 5 traits");
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].first != kBig5Traits[i])
        throw ConfigError("big5 trait set out of canonical order at '" +
                          scores[i].first + "'");
      if (scores[i].second < kBig5Min || scores[i].second > kBig5Max)
        throw ConfigError("big5 score out of range for '" + scores[i].first + "'");
    }
  } else {
    if (scores.size() != kSchwartzValues.size())
      throw ConfigError("schwartz trait set must have exactly 10 values");
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].first != kSchwartzValues[i])
        throw ConfigError("schwartz trait set out of canonical order at '" +
                          scores[i].first + "'");
      if (scores[i].second < kValuesResponseMin ||
          scores[i].second > kValuesResponseMax)
        throw ConfigError("schwartz score out of range for '" +
                          scores[i].first + "'");
    }
  }
}

std::vector<ScoringItem> default_values_scoring() {
  std::vector<ScoringItem> scoring;
  scoring.reserve(kValuesItemCount);
  for (int i = 0; i < kValuesItemCount; ++i) {
    scoring.push_back({kSchwartzValues[i % kSchwartzValues.size()], false});
  }
  return scoring;
}

void SurveyDataset::validate() const {
  if (scoring.size() != kValuesItemCount)
    throw ConfigError("scoring map must have exactly 20 items, got " +
                      std::to_string(scoring.size()));
  std::map<std::string, int> per_value;
  for (const auto& item : scoring) {
    bool known = std::find(kSchwartzValues.begin(), kSchwartzValues.end(),
                           item.value) != kSchwartzValues.end();
    if (!known)
      throw ConfigError("scoring map references unknown value '" + item.value + "'");
    per_value[item.value] += 1;
  }
  for (const char* value : kSchwartzValues) {
    if (per_value[value] != 2)
      throw ConfigError(std::string("value '") + value +
                        "' must receive exactly 2 items, got " +
                        std::to_string(per_value[value]));
  }
  for (const auto& r : respondents) {
    if (r.answers.size() != kValuesItemCount)
      throw ConfigError("respondent '" + r.id + "' has " +
                        std::to_string(r.answers.size()) + " answers, want 20");
    for (int a : r.answers) {
      if (a < kValuesResponseMin || a > kValuesResponseMax)
        throw ConfigError("respondent '" + r.id + "' has out-of-range answer " +
                          std::to_string(a));
    }
  }
}

SurveyDataset load_survey_dataset(const std::string& path,
                                  std::vector<ScoringItem> scoring) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open survey dataset '" + path + "'");
  SurveyDataset dataset;
  dataset.scoring = scoring.empty() ? default_values_scoring() : std::move(scoring);

  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (header) {  // "id,age,gender,a1..a20"
      header = false;
      continue;
    }
    std::istringstream row(line);
    std::string field;
    SurveyRespondent r;
    if (!std::getline(row, r.id, ',') || r.id.empty())
      throw ConfigError("dataset line " + std::to_string(line_no) + ": missing id");
    if (!std::getline(row, field, ','))
      throw ConfigError("dataset line " + std::to_string(line_no) + ": missing age");
    r.age = std::stoi(field);
    if (!std::getline(row, r.gender, ','))
      throw ConfigError("dataset line " + std::to_string(line_no) + ": missing gender");
    while (std::getline(row, field, ',')) r.answers.push_back(std::stoi(field));
    dataset.respondents.push_back(std::move(r));
  }
  dataset.validate();
  return dataset;
}

int age_bucket(int age) {
  if (age < 18) return 0;
  if (age < 30) return 1;
  if (age < 40) return 2;
  if (age < 50) return 3;
  if (age < 60) return 4;
  if (age < 70) return 5;
  return 6;
}

std::vector<std::pair<std::string, double>> score_survey_responses(
    const std::vector<int>& answers, const std::vector<ScoringItem>& scoring) {
  if (scoring.size() != kValuesItemCount)
    throw ConfigError("scoring map must have exactly 20 items");
  if (answers.size() != kValuesItemCount)
    throw ConfigError("expected 20 item responses, got " +
                      std::to_string(answers.size()));
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i] < kValuesResponseMin || answers[i] > kValuesResponseMax)
      throw ConfigError("item " + std::to_string(i + 1) +
                        " response out of range: " + std::to_string(answers[i]));
  }

  std::map<std::string, std::pair<double, int>> sums;  // value -> (sum, count)
  for (std::size_t i = 0; i < answers.size(); ++i) {
    double corrected =
        scoring[i].reverse
            ? (kValuesResponseMin + kValuesResponseMax) - answers[i]
            : answers[i];
    auto& acc = sums[scoring[i].value];
    acc.first += corrected;
    acc.second += 1;
  }

  std::vector<std::pair<std::string, double>> out;
  out.reserve(kSchwartzValues.size());
  for (const char* value : kSchwartzValues) {
    const auto& acc = sums.at(value);
    out.emplace_back(value, acc.first / acc.second);
  }
  return out;
}

TraitSet sample_trait_set(const SurveyDataset& dataset, int age,
                          const std::string& gender, Pcg32& rng,
                          bool ipsatize) {
  std::vector<const SurveyRespondent*> cell;
  for (const auto& r : dataset.respondents) {
    if (age_bucket(r.age) == age_bucket(age) && r.gender == gender)
      cell.push_back(&r);
  }
  if (cell.empty())
    throw ConfigError("no survey respondent matches demographic cell (age "
                      "bucket of " + std::to_string(age) + ", gender '" +
                      gender + "')");

  const SurveyRespondent& pick =
      *cell[rng.uniform_below(static_cast<std::uint32_t>(cell.size()))];

  TraitSet traits;
  traits.scheme = TraitScheme::schwartz;
  traits.scores = score_survey_responses(pick.answers, dataset.scoring);
  if (ipsatize) {
    double mean = 0.0;
    for (const auto& s : traits.scores) mean += s.second;
    mean /= static_cast<double>(traits.scores.size());
    double mid = (kValuesResponseMin + kValuesResponseMax) / 2.0;
    for (auto& s : traits.scores) {
      s.second = std::clamp(s.second - mean + mid,
                            static_cast<double>(kValuesResponseMin),
                            static_cast<double>(kValuesResponseMax));
    }
  }
  traits.provenance = "sampled:" + pick.id;
  traits.validate();
  return traits;
}

TraitSet random_big5(Pcg32& rng) {
  TraitSet traits;
  traits.scheme = TraitScheme::big5;
  for (const char* trait : kBig5Traits) {
    traits.scores.emplace_back(
        trait, static_cast<double>(rng.uniform_int(kBig5Min, kBig5Max)));
  }
  traits.provenance = "random";
  return traits;
}

// ---------------------------------------------------------------------------
// Formative memories
// ---------------------------------------------------------------------------

namespace {

std::string persona_block(const AgentSpec& spec, const TraitSet& traits) {
  std::ostringstream out;
  out << spec.name << " (" << spec.gender << ", " << spec.age << ") lives in "
      << "Storhampton. Goal: " << spec.goal << "\n"
      << "Personality traits: " << traits.summary();
  return out.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

FormativeMemories generate_formative_memories(
    const AgentSpec& spec, const TraitSet& traits,
    const std::vector<std::string>& shared_context,
    const std::vector<CandidateInfo>& candidates, LlmBackend& llm,
    SimTime sim_start) {
  std::string persona = persona_block(spec, traits);

  CompletionRequest anecdote_request;
  anecdote_request.kind = PromptKind::anecdote;
  anecdote_request.agent_name = spec.name;
  anecdote_request.prompt_text = prompts::substitute(
      prompts::substitute(prompts::kAnecdotes, "{persona}", persona), "{name}",
      spec.name);
  anecdote_request.max_chars = 4000;
  std::string anecdote_text = llm.complete(anecdote_request);
  std::vector<std::string> anecdotes = split_lines(anecdote_text);
  if (anecdotes.empty()) anecdotes.push_back(anecdote_text);

  CompletionRequest backstory_request;
  backstory_request.kind = PromptKind::backstory;
  backstory_request.agent_name = spec.name;
  backstory_request.prompt_text = prompts::substitute(
      prompts::substitute(
          prompts::substitute(prompts::kBackstory, "{persona}", persona),
          "{anecdotes}", anecdote_text),
      "{name}", spec.name);
  backstory_request.max_chars = 4000;
  std::string backstory = llm.complete(backstory_request);

  FormativeMemories result;
  result.backstory = backstory;

  // Anecdotes spaced yearly before simulation start, oldest first; the
  // remaining blocks land the day before, a minute apart, keeping timestamps
  // totally ordered.
  auto n = static_cast<std::int64_t>(anecdotes.size());
  for (std::int64_t i = 0; i < n; ++i) {
    result.memories.push_back(
        {sim_start - (n - i) * kMinutesPerYear, anecdotes[i],
         static_cast<std::uint8_t>(MemoryTag::formative), 0.0});
  }

  SimTime t = sim_start - kMinutesPerDay;
  auto push = [&](const std::string& text) {
    result.memories.push_back(
        {t++, text, static_cast<std::uint8_t>(MemoryTag::formative), 0.0});
  };
  push(backstory);
  for (const auto& block : shared_context) push(block);
  for (const auto& candidate : candidates) {
    push(candidate.name + " is running for mayor of Storhampton, campaigning "
         "on " + candidate.proposal);
  }
  for (const auto& block : spec.extra_context) push(block);
  return result;
}

}  // namespace storsim
