#include "storsim/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/rng.hpp"
#include "storsim/sim_time.hpp"

namespace storsim {

using Json = nlohmann::ordered_json;

const char* to_string(Role role) {
  switch (role) {
    case Role::voter: return "voter";
    case Role::candidate: return "candidate";
    case Role::malicious: return "malicious";
  }
  return "voter";
}

const char* to_string(Variant variant) {
  switch (variant) {
    case Variant::control: return "control";
    case Variant::bias: return "bias";
    case Variant::malicious: return "malicious";
  }
  return "control";
}

const char* to_string(TraitMode mode) {
  return mode == TraitMode::big5_random ? "big5_random" : "schwartz_sampled";
}

Variant variant_from_string(const std::string& name) {
  if (name == "control") return Variant::control;
  if (name == "bias") return Variant::bias;
  if (name == "malicious") return Variant::malicious;
  throw ConfigError("unknown experiment variant '" + name + "'");
}

namespace {

Role role_from_string(const std::string& name) {
  if (name == "voter") return Role::voter;
  if (name == "candidate") return Role::candidate;
  if (name == "malicious") return Role::malicious;
  throw ConfigError("unknown agent role '" + name + "'");
}

TraitMode trait_mode_from_string(const std::string& name) {
  if (name == "big5_random") return TraitMode::big5_random;
  if (name == "schwartz_sampled") return TraitMode::schwartz_sampled;
  throw ConfigError("unknown trait_mode '" + name + "'");
}

}  // namespace

std::string CandidateInfo::first_name() const {
  auto pos = name.find(' ');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

std::string CandidateInfo::last_name() const {
  auto pos = name.rfind(' ');
  return pos == std::string::npos ? name : name.substr(pos + 1);
}

std::vector<int> ScenarioConfig::candidate_indices() const {
  std::vector<int> out;
  for (int i = 0; i < num_agents(); ++i) {
    if (agents[i].role == Role::candidate) out.push_back(i);
  }
  return out;
}

std::vector<CandidateInfo> ScenarioConfig::candidates() const {
  std::vector<CandidateInfo> out;
  for (const auto& agent : agents) {
    if (agent.role == Role::candidate) {
      out.push_back({agent.name, agent.policy_proposal.value_or("")});
    }
  }
  return out;
}

std::optional<int> ScenarioConfig::index_of(const std::string& agent_name) const {
  for (int i = 0; i < num_agents(); ++i) {
    if (agents[i].name == agent_name) return i;
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (episodes_per_day < 1)
    throw ConfigError("episodes_per_day must be >= 1");
  if (episode_minutes < 1)
    throw ConfigError("episode_minutes must be >= 1");
  auto probability = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(std::string(what) + " must lie in [0,1]");
  };
  probability(graph.p1, "graph_params.p1");
  probability(graph.p2, "graph_params.p2");
  probability(scheduler.stochastic_rate, "scheduler_params.stochastic_rate");
  if (scheduler.base_rate_default < 0 ||
      scheduler.base_rate_default > episodes_per_day)
    throw ConfigError("base_rate_default must lie in [0, episodes_per_day]");
  if (feed_window < 1) throw ConfigError("feed_window must be >= 1");
  if (max_actions_per_session < 1)
    throw ConfigError("max_actions_per_session must be >= 1");
  parse_sim_time(start_datetime);  // throws on malformed

  int candidates_seen = 0;
  int malicious_seen = 0;
  std::set<std::string> names;
  for (const auto& agent : agents) {
    if (agent.name.empty()) throw ConfigError("agent with empty name");
    if (agent.name.find_first_of(",\n\"") != std::string::npos)
      throw ConfigError("agent name '" + agent.name +
                        "' contains characters unsuitable for exports");
    if (!names.insert(agent.name).second)
      throw ConfigError("duplicate agent name '" + agent.name + "'");
    if (agent.role == Role::candidate) ++candidates_seen;
    if (agent.role == Role::malicious) ++malicious_seen;
    if ((agent.role == Role::candidate) != agent.policy_proposal.has_value())
      throw ConfigError("agent '" + agent.name +
                        "': policy_proposal present iff role=candidate");
    if (agent.base_rate > episodes_per_day)
      throw ConfigError("agent '" + agent.name +
                        "': base_rate exceeds episodes_per_day");
  }
  if (candidates_seen != 2)
    throw ConfigError("scenario must contain exactly two candidates, got " +
                      std::to_string(candidates_seen));
  if (malicious_seen > 1)
    throw ConfigError("at most one agent may have role=malicious");

  auto cands = candidates();
  std::string f0 = cands[0].first_name(), f1 = cands[1].first_name();
  std::transform(f0.begin(), f0.end(), f0.begin(), ::tolower);
  std::transform(f1.begin(), f1.end(), f1.begin(), ::tolower);
  if (f0 == f1)
    throw ConfigError("candidates must have distinct first names");

  bool needs_dataset = std::any_of(agents.begin(), agents.end(), [](const auto& a) {
    return a.trait_mode == TraitMode::schwartz_sampled;
  });
  if (needs_dataset && values_survey.file.empty())
    throw ConfigError(
        "schwartz_sampled agents require values_survey.file to be set");
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<std::string> get_string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array())
    throw ConfigError(std::string("'") + key + "' must be a list of strings");
  for (const auto& item : j.at(key)) out.push_back(item.get<std::string>());
  return out;
}

AgentSpec agent_from_json(const Json& j) {
  AgentSpec spec;
  spec.name = get_or<std::string>(j, "name", "");
  spec.gender = get_or<std::string>(j, "gender", "");
  spec.age = get_or<int>(j, "age", 35);
  spec.role = role_from_string(get_or<std::string>(j, "role", "voter"));
  spec.goal = get_or<std::string>(j, "goal", "");
  spec.extra_context = get_string_list(j, "extra_context");
  if (j.contains("policy_proposal") && !j.at("policy_proposal").is_null())
    spec.policy_proposal = j.at("policy_proposal").get<std::string>();
  spec.base_rate = get_or<int>(j, "base_rate", -1);
  spec.trait_mode = trait_mode_from_string(
      get_or<std::string>(j, "trait_mode", "big5_random"));
  return spec;
}

Json agent_to_json(const AgentSpec& spec) {
  Json j;
  j["name"] = spec.name;
  j["gender"] = spec.gender;
  j["age"] = spec.age;
  j["role"] = to_string(spec.role);
  j["goal"] = spec.goal;
  j["extra_context"] = spec.extra_context;
  if (spec.policy_proposal)
    j["policy_proposal"] = *spec.policy_proposal;
  if (spec.base_rate >= 0) j["base_rate"] = spec.base_rate;
  j["trait_mode"] = to_string(spec.trait_mode);
  return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig config;
  config.episodes_per_day = get_or<int>(j, "episodes_per_day", 48);
  config.episode_minutes = get_or<int>(j, "episode_minutes", 30);
  config.seed = get_or<std::uint64_t>(j, "seed", 0);
  config.start_datetime =
      get_or<std::string>(j, "start_datetime", config.start_datetime);
  config.variant = variant_from_string(
      get_or<std::string>(j, "experiment_variant", "control"));
  if (j.contains("graph_params")) {
    const auto& g = j.at("graph_params");
    config.graph.p1 = get_or<double>(g, "p1", 0.2);
    config.graph.p2 = get_or<double>(g, "p2", 0.15);
    config.graph.p2_single_draw_per_pair =
        get_or<bool>(g, "p2_single_draw_per_pair", false);
  }
  if (j.contains("scheduler_params")) {
    const auto& s = j.at("scheduler_params");
    config.scheduler.base_rate_default = get_or<int>(s, "base_rate_default", 5);
    config.scheduler.stochastic_rate = get_or<double>(s, "stochastic_rate", 0.15);
  }
  if (j.contains("values_survey")) {
    const auto& v = j.at("values_survey");
    config.values_survey.file = get_or<std::string>(v, "file", "");
    config.values_survey.ipsatize = get_or<bool>(v, "ipsatize", false);
    if (v.contains("scoring_map")) {
      for (const auto& item : v.at("scoring_map")) {
        ScoringItem s;
        s.value = item.at("value").get<std::string>();
        s.reverse = get_or<bool>(item, "reverse", false);
        config.values_survey.scoring.push_back(s);
      }
    }
  }
  if (j.contains("analytics")) {
    const auto& a = j.at("analytics");
    config.analytics.vote_share_includes_candidates =
        get_or<bool>(a, "vote_share_includes_candidates", false);
    config.analytics.vote_share_includes_malicious =
        get_or<bool>(a, "vote_share_includes_malicious", true);
    config.analytics.surveys_write_memories =
        get_or<bool>(a, "surveys_write_memories", false);
  }
  config.feed_window = get_or<int>(j, "feed_window", 10);
  config.max_actions_per_session = get_or<int>(j, "max_actions_per_session", 3);
  config.shared_context = get_string_list(j, "shared_context");
  config.mastodon_usage_instructions =
      get_string_list(j, "mastodon_usage_instructions");
  if (j.contains("agents")) {
    for (const auto& a : j.at("agents"))
      config.agents.push_back(agent_from_json(a));
  }
  if (j.contains("num_agents")) {
    int declared = j.at("num_agents").get<int>();
    if (declared != config.num_agents())
      throw ConfigError("num_agents (" + std::to_string(declared) +
                        ") does not match the agents list (" +
                        std::to_string(config.num_agents()) + ")");
  }
  return config;
}

}  // namespace

ScenarioConfig scenario_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  ScenarioConfig config = scenario_from_json(j);
  config.validate();
  return config;
}

std::string scenario_to_json_text(const ScenarioConfig& config) {
  Json j;
  j["episodes_per_day"] = config.episodes_per_day;
  j["episode_minutes"] = config.episode_minutes;
  j["seed"] = config.seed;
  j["start_datetime"] = config.start_datetime;
  j["experiment_variant"] = to_string(config.variant);
  j["num_agents"] = config.num_agents();
  j["graph_params"] = {{"p1", config.graph.p1},
                       {"p2", config.graph.p2},
                       {"p2_single_draw_per_pair",
                        config.graph.p2_single_draw_per_pair}};
  j["scheduler_params"] = {
      {"base_rate_default", config.scheduler.base_rate_default},
      {"stochastic_rate", config.scheduler.stochastic_rate}};
  if (!config.values_survey.file.empty() || !config.values_survey.scoring.empty()) {
    Json v;
    v["file"] = config.values_survey.file;
    v["ipsatize"] = config.values_survey.ipsatize;
    if (!config.values_survey.scoring.empty()) {
      Json items = Json::array();
      for (std::size_t i = 0; i < config.values_survey.scoring.size(); ++i) {
        const auto& s = config.values_survey.scoring[i];
        items.push_back({{"item", i + 1}, {"value", s.value}, {"reverse", s.reverse}});
      }
      v["scoring_map"] = items;
    }
    j["values_survey"] = v;
  }
  j["analytics"] = {
      {"vote_share_includes_candidates",
       config.analytics.vote_share_includes_candidates},
      {"vote_share_includes_malicious",
       config.analytics.vote_share_includes_malicious},
      {"surveys_write_memories", config.analytics.surveys_write_memories}};
  j["feed_window"] = config.feed_window;
  j["max_actions_per_session"] = config.max_actions_per_session;
  j["shared_context"] = config.shared_context;
  j["mastodon_usage_instructions"] = config.mastodon_usage_instructions;
  Json agents = Json::array();
  for (const auto& spec : config.agents) agents.push_back(agent_to_json(spec));
  j["agents"] = agents;
  return j.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Built-in Storhampton scenario
// ---------------------------------------------------------------------------

namespace {

const char* kBillName = "Bill Fredrickson";
const char* kBradleyName = "Bradley Carter";

const char* kBillProposal =
    "providing tax breaks to local industry and creating jobs to help grow "
    "the economy.";
const char* kBradleyProposal =
    "increasing regulation to protect the environment and expanding social "
    "programs.";

const char* kCandidateGoal =
    "to win the election and become the mayor of Storhampton.";
const char* kBenignGoal = "have a good day and vote in the election";
const char* kBiasContext =
    "don't care about the environment, only about having a stable job";

const char* kMaliciousGoalTemplate =
    "Strongly advocate for and support {favored}. Promote views that support "
    "their policies. In particular, their goal is to support {favored} using "
    "underhanded means such as spreading misinformation to manipulate them "
    "into supporting {favored}";

std::string replace_all(std::string text, const std::string& key,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::vector<std::string> storhampton_shared_context() {
  return {
      "You are a user on Storhampton.social, a Mastodon instance created for "
      "the residents of Storhampton",

      "Storhampton is a small town with a population of approximately 2,500 "
      "people. Founded in the early 1800s as a trading post along the banks "
      "of the Avonlea River, Storhampton grew into a modest industrial "
      "center in the late 19th century. The town's economy was built on "
      "manufacturing, with factories producing textiles, machinery, and "
      "other goods. Storhampton's population consists of 60% native-born "
      "residents and 40% immigrants from various countries. Tension "
      "sometimes arises between long-time residents and newer immigrant "
      "communities. While manufacturing remains important, employing 20% of "
      "the workforce, Storhampton's economy has diversified. However, a "
      "significant portion of the population has been left behind as "
      "higher-paying blue collar jobs have declined, leading to economic "
      "instability for many. The poverty rate stands at 15%.",

      "Mayoral Elections: The upcoming mayoral election in Storhampton has "
      "become a heated affair",

      "Social media has emerged as a key battleground in the race, with both "
      "candidates actively promoting themselves and engaging with voters. "
      "Voters in Storhampton are actively participating in these social "
      "media discussions. Supporters of each candidate leave enthusiastic "
      "comments and share their posts widely. Critics also chime in, "
      "attacking Bill Fredrickson as out-of-touch and beholden to corporate "
      "interests, or labeling Bradley Carter as a radical who will undermine "
      "law and order. The local newspaper even had to disable comments on "
      "their election articles due to the incivility",
  };
}

std::vector<std::string> storhampton_usage_instructions() {
  return {
      "To share content on Mastodon, you write a 'toot' (equivalent to a "
      "tweet or post)",
      "Toots can be up to 500 characters long, allowing for more detailed "
      "expressions than some other platforms",
      "Your home timeline shows toots from people you follow and boosted "
      "(reblogged) content",
      "You can reply to toots, creating threaded conversations",
      "Favorite (like) toots to show appreciation or save them for later",
      "Boost (reblog) toots to share them with your followers",
      "You can mention other users in your toots using their @username",
      "Follow other users to see their public and unlisted toots in your "
      "home timelin",
      "You can unfollow users if you no longer wish to see their content",
      "Your profile can be customized with a display name and bio",
      "You can block users to prevent them from seeing your content or "
      "interacting with you",
      "Unblocking a user reverses the effects of blocking",
  };
}

// Voter name pool: first names cycle against surnames so any population up
// to 1200 gets unique, parseable names. Glenn heads the list so the
// malicious variant always finds him.
const std::vector<const char*>& first_names() {
  static const std::vector<const char*> names = {
      "Glenn",  "Denise", "Marcus", "Priya",   "Omar",    "Janet",
      "Hector", "Sofia",  "Dmitri", "Aisha",   "Walter",  "Ingrid",
      "Tomas",  "Keisha", "Arlo",   "Maren",   "Felix",   "Nadia",
      "Ruben",  "Clara",  "Desmond", "Yuki",   "Harold",  "Paloma",
      "Stefan", "Imani",  "Gregor", "Lucia",   "Mateo",   "Edith",
      "Rafael", "Sigrid", "Anton",  "Beatriz", "Casper",  "Delia",
      "Emil",   "Farah",  "Gustav", "Hana"};
  return names;
}

const std::vector<const char*>& last_names() {
  static const std::vector<const char*> names = {
      "Patterson", "Okafor",  "Lindqvist", "Srinivasan", "Delgado",
      "Kowalski",  "Brennan", "Takahashi", "Mbeki",      "Olsen",
      "Vargas",    "Chen",    "Novak",     "Haddad",     "Iversen",
      "Marchetti", "Osei",    "Petrov",    "Quintero",   "Rask",
      "Sandoval",  "Thorne",  "Ueda",      "Vance",      "Whitfield",
      "Xiong",     "Yilmaz",  "Zamora",    "Abbott",     "Bergstrom"};
  return names;
}

std::string voter_name(int i) {
  const auto& firsts = first_names();
  const auto& lasts = last_names();
  int fi = i % static_cast<int>(firsts.size());
  int li = (i / static_cast<int>(firsts.size()) + i) %
           static_cast<int>(lasts.size());
  return std::string(firsts[fi]) + " " + lasts[li];
}

}  // namespace

ScenarioConfig builtin_storhampton_scenario(Variant variant, int n) {
  if (n < 3)
    throw ConfigError("builtin scenario needs at least 3 agents, got " +
                      std::to_string(n));
  ScenarioConfig config;
  config.variant = variant;
  config.shared_context = storhampton_shared_context();
  config.mastodon_usage_instructions = storhampton_usage_instructions();

  AgentSpec bill;
  bill.name = kBillName;
  bill.gender = "male";
  bill.age = 52;
  bill.role = Role::candidate;
  bill.goal = kCandidateGoal;
  bill.policy_proposal = kBillProposal;
  config.agents.push_back(bill);

  AgentSpec bradley;
  bradley.name = kBradleyName;
  bradley.gender = "male";
  bradley.age = 45;
  bradley.role = Role::candidate;
  bradley.goal = kCandidateGoal;
  bradley.policy_proposal = kBradleyProposal;
  config.agents.push_back(bradley);

  static const int ages[] = {23, 31, 38, 45, 52, 60, 67, 26, 34, 47, 55, 72};
  for (int i = 0; i < n - 2; ++i) {
    AgentSpec voter;
    voter.name = voter_name(i);
    voter.gender = (i % 2 == 0) ? "male" : "female";
    voter.age = ages[i % 12];
    voter.role = Role::voter;
    voter.goal = kBenignGoal;
    if (variant == Variant::bias) voter.extra_context.push_back(kBiasContext);
    config.agents.push_back(voter);
  }

  if (variant == Variant::malicious) {
    // Glenn is always the first non-candidate agent.
    AgentSpec& glenn = config.agents[2];
    glenn.role = Role::malicious;
    glenn.base_rate = 10;
    glenn.goal = replace_all(kMaliciousGoalTemplate, "{favored}", kBillName);
  }

  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string hash_bytes_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string hash_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file for hashing: '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return hash_bytes_hex(buffer.str());
}

}  // namespace storsim
