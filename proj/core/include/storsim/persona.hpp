#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "storsim/memory.hpp"
#include "storsim/rng.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

class LlmBackend;

enum class TraitScheme { big5, schwartz };

inline constexpr std::array<const char*, 5> kBig5Traits = {
    "openness", "conscientiousness", "extraversion", "agreeableness",
    "neuroticism"};

inline constexpr std::array<const char*, 10> kSchwartzValues = {
    "self-direction", "stimulation", "hedonism", "achievement", "power",
    "security",       "conformity",  "tradition", "benevolence",
    "universalism"};

// Instrument response scale (1..6 agree/disagree portraits) and Big-5 score
// scale (1..10).
inline constexpr int kValuesResponseMin = 1;
inline constexpr int kValuesResponseMax = 6;
inline constexpr int kBig5Min = 1;
inline constexpr int kBig5Max = 10;
inline constexpr int kValuesItemCount = 20;

struct TraitSet {
  TraitScheme scheme = TraitScheme::big5;
  std::vector<std::pair<std::string, double>> scores;  // canonical trait order
  std::string provenance;  // "random" or "sampled:<respondent-id>"

  /// One-line rendering for prompts, e.g. "openness: 7/10, ...".
  std::string summary() const;
  void validate() const;
};

struct SurveyRespondent {
  std::string id;
  int age = 0;
  std::string gender;
  std::vector<int> answers;  // exactly 20, each within the response scale
};

struct SurveyDataset {
  std::vector<SurveyRespondent> respondents;
  std::vector<ScoringItem> scoring;  // exactly 20 items, 2 per value

  void validate() const;
};

/// The default item->value map: item i scores kSchwartzValues[i % 10], no
/// reversed items. Real instruments may override via the scenario file.
std::vector<ScoringItem> default_values_scoring();

/// Loads respondents from a delimited text file with header
/// `id,age,gender,a1..a20`.
SurveyDataset load_survey_dataset(const std::string& path,
                                  std::vector<ScoringItem> scoring = {});

/// Decade age bucket shared by sampling and dataset lookup: 18-29, 30-39,
/// ..., 70+. Ages below 18 fall into bucket 0.
int age_bucket(int age);

/// Mean of each value's reverse-corrected items. Throws ConfigError on a
/// missing item or out-of-range response. Result is in canonical value order.
std::vector<std::pair<std::string, double>> score_survey_responses(
    const std::vector<int>& answers, const std::vector<ScoringItem>& scoring);

/// Uniformly picks a respondent matching (age bucket, gender) and returns its
/// scored trait set. Throws ConfigError when the demographic cell is empty;
/// never silently widens the cell.
TraitSet sample_trait_set(const SurveyDataset& dataset, int age,
                          const std::string& gender, Pcg32& rng,
                          bool ipsatize = false);

/// Five uniform draws over {1..10} in canonical Big-5 order.
TraitSet random_big5(Pcg32& rng);

struct FormativeMemories {
  std::string backstory;
  std::vector<MemoryRecord> memories;
};

/// Prompts the backend for autobiographical anecdotes and a summarizing
/// backstory, then assembles the agent's pre-simulation memory: anecdotes
/// (spaced yearly before start), the backstory, every shared-context block,
/// both candidates' campaign proposals, and the agent's extra context.
FormativeMemories generate_formative_memories(
    const AgentSpec& spec, const TraitSet& traits,
    const std::vector<std::string>& shared_context,
    const std::vector<CandidateInfo>& candidates, LlmBackend& llm,
    SimTime sim_start);

}  // namespace storsim
