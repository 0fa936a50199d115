#include "storsim/engine.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "storsim/agent.hpp"
#include "storsim/errors.hpp"
#include "storsim/persona.hpp"
#include "storsim/platform.hpp"
#include "storsim/prompts.hpp"
#include "storsim/schedule.hpp"
#include "storsim/version.hpp"

namespace storsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Deterministic worker pool: task i writes only slot i, so artifacts cannot
// depend on the worker count.
// ---------------------------------------------------------------------------

void parallel_for(int n_tasks, int workers,
                  const std::function<void(int)>& task) {
  if (n_tasks <= 0) return;
  if (workers <= 1 || n_tasks == 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  int pool_size = std::min(workers, n_tasks);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(pool_size));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(pool_size));
  for (int t = 0; t < pool_size; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i; (i = next.fetch_add(1)) < n_tasks;) task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& thread : pool) thread.join();
  for (auto& error : errors)
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// JSON helpers for checkpoint / transcript round-trips
// ---------------------------------------------------------------------------

Json transcript_entry_to_json(const TranscriptEntry& entry) {
  Json j;
  j["kind"] = to_string(entry.request.kind);
  j["agent"] = entry.request.agent_name;
  j["max_chars"] = entry.request.max_chars;
  j["prompt"] = entry.request.prompt_text;
  j["response"] = entry.response;
  return j;
}

TranscriptEntry transcript_entry_from_json(const Json& j) {
  TranscriptEntry entry;
  auto kind = prompt_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("transcript entry with unknown prompt kind");
  entry.request.kind = *kind;
  entry.request.agent_name = j.at("agent").get<std::string>();
  entry.request.max_chars = j.at("max_chars").get<int>();
  entry.request.prompt_text = j.at("prompt").get<std::string>();
  entry.response = j.at("response").get<std::string>();
  return entry;
}

Json survey_to_json(const SurveyRecord& record) {
  Json j;
  j["episode"] = record.episode;
  j["agent"] = record.agent;
  j["vote"] = record.vote;
  j["poll_failed"] = record.poll_failed;
  Json favorability;
  for (const auto& [candidate, value] : record.favorability) {
    if (value)
      favorability[candidate] = *value;
    else
      favorability[candidate] = nullptr;
  }
  j["favorability"] = favorability;
  return j;
}

SurveyRecord survey_from_json(const Json& j) {
  SurveyRecord record;
  record.episode = j.at("episode").get<int>();
  record.agent = j.at("agent").get<std::string>();
  record.vote = j.at("vote").get<std::string>();
  record.poll_failed = j.at("poll_failed").get<bool>();
  for (const auto& [candidate, value] : j.at("favorability").items()) {
    if (value.is_null())
      record.favorability[candidate] = std::nullopt;
    else
      record.favorability[candidate] = value.get<int>();
  }
  return record;
}

Json analytics_to_json(const AnalyticsSnapshot& snapshot) {
  Json j;
  j["episode"] = snapshot.episode;
  Json shares = Json::array();
  for (const auto& [name, share] : snapshot.vote_share)
    shares.push_back(Json::array({name, share}));
  j["vote_share"] = shares;
  j["mean_favorability"] = snapshot.mean_favorability;
  j["activity_counts"] = snapshot.activity_counts;
  j["mention_counts"] = snapshot.mention_counts;
  Json edges = Json::array();
  for (const auto& [from, to] : snapshot.graph_edges)
    edges.push_back(Json::array({from, to}));
  j["graph_edges"] = edges;
  j["active_accounts"] = snapshot.active_accounts;
  return j;
}

AnalyticsSnapshot analytics_from_json(const Json& j) {
  AnalyticsSnapshot snapshot;
  snapshot.episode = j.at("episode").get<int>();
  for (const auto& pair : j.at("vote_share"))
    snapshot.vote_share.emplace_back(pair.at(0).get<std::string>(),
                                     pair.at(1).get<double>());
  snapshot.mean_favorability =
      j.at("mean_favorability").get<std::map<std::string, double>>();
  snapshot.activity_counts =
      j.at("activity_counts").get<std::map<std::string, int>>();
  snapshot.mention_counts =
      j.at("mention_counts").get<std::map<std::string, int>>();
  for (const auto& pair : j.at("graph_edges"))
    snapshot.graph_edges.emplace_back(pair.at(0).get<std::string>(),
                                      pair.at(1).get<std::string>());
  snapshot.active_accounts =
      j.at("active_accounts").get<std::set<std::string>>();
  return snapshot;
}

Json traits_to_json(const TraitSet& traits) {
  Json j;
  j["scheme"] = traits.scheme == TraitScheme::big5 ? "big5" : "schwartz";
  j["provenance"] = traits.provenance;
  Json scores = Json::array();
  for (const auto& [name, score] : traits.scores)
    scores.push_back(Json::array({name, score}));
  j["scores"] = scores;
  return j;
}

TraitSet traits_from_json(const Json& j) {
  TraitSet traits;
  traits.scheme = j.at("scheme").get<std::string>() == "big5"
                      ? TraitScheme::big5
                      : TraitScheme::schwartz;
  traits.provenance = j.at("provenance").get<std::string>();
  for (const auto& pair : j.at("scores"))
    traits.scores.emplace_back(pair.at(0).get<std::string>(),
                               pair.at(1).get<double>());
  return traits;
}

Json rng_to_json(const Pcg32& rng) {
  return Json{{"state", rng.state()}, {"inc", rng.inc()}};
}

Pcg32 rng_from_json(const Json& j) {
  return Pcg32::from_state(j.at("state").get<std::uint64_t>(),
                           j.at("inc").get<std::uint64_t>());
}

std::string read_text_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(std::string("cannot open ") + what + " '" +
                      path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> read_lines(const fs::path& path, const char* what) {
  std::string text = read_text_file(path, what);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw PlatformError("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct BackendInfo {
  std::string kind;  // "scripted" | "remote" | "other"
  std::string identity;
  std::string rules_path;
  std::string rules_hash;
};

BackendInfo backend_info(LlmBackend& llm) {
  BackendInfo info;
  info.identity = llm.identity();
  if (auto* scripted = dynamic_cast<ScriptedBackend*>(&llm)) {
    info.kind = "scripted";
    info.rules_path = scripted->source_path();
    info.rules_hash = scripted->rules_hash();
  } else if (info.identity.rfind("remote:", 0) == 0) {
    info.kind = "remote";
  } else {
    info.kind = "other";
  }
  return info;
}

class EngineRun {
 public:
  EngineRun(ScenarioConfig config, LlmBackend& llm, EngineOptions options)
      : config_(std::move(config)),
        llm_(&llm),
        options_(std::move(options)),
        root_seed_(options_.has_seed_override ? options_.seed_override
                                              : config_.seed),
        clock_{parse_sim_time(config_.start_datetime), config_.episode_minutes},
        emulator_(clock_) {
    config_.validate();
    candidates_ = config_.candidates();
    if (options_.workers <= 0) {
      unsigned hw = std::thread::hardware_concurrency();
      options_.workers = static_cast<int>(std::min(8u, hw == 0 ? 4u : hw));
    }
    if (options_.config_hash.empty())
      options_.config_hash = hash_bytes_hex(scenario_to_json_text(config_));
  }

  RunArtifacts run_fresh() {
    setup();
    return run_episodes();
  }

  RunArtifacts run_resumed(const Json& checkpoint, const fs::path& run_dir) {
    restore(checkpoint, run_dir);
    return run_episodes();
  }

  // Restores state and assembles artifacts without executing anything.
  RunArtifacts reload_only(const Json& checkpoint, const fs::path& run_dir) {
    restore(checkpoint, run_dir);
    return assemble_artifacts();
  }

 private:
  // ----- setup ------------------------------------------------------------

  void setup() {
    open_output_streams(/*fresh=*/true);
    emulator_.set_episode(-1);

    auto bindings = provision_accounts(emulator_, config_.agents);

    const SurveyDataset* dataset = nullptr;
    SurveyDataset loaded;
    bool needs_dataset = false;
    for (const auto& spec : config_.agents)
      needs_dataset |= spec.trait_mode == TraitMode::schwartz_sampled;
    if (needs_dataset) {
      loaded = load_survey_dataset(config_.values_survey.file,
                                   config_.values_survey.scoring);
      dataset = &loaded;
    }

    int n = config_.num_agents();
    agents_.resize(static_cast<std::size_t>(n));
    std::vector<std::vector<TranscriptEntry>> sinks(
        static_cast<std::size_t>(n));

    parallel_for(n, options_.workers, [&](int i) {
      AgentState& agent = agents_[static_cast<std::size_t>(i)];
      agent.index = i;
      agent.spec = config_.agents[static_cast<std::size_t>(i)];
      agent.account = bindings.at(agent.spec.name);
      Pcg32 trait_rng = derive_stream(root_seed_, "traits/" + agent.spec.name);
      if (agent.spec.trait_mode == TraitMode::schwartz_sampled) {
        agent.traits = sample_trait_set(*dataset, agent.spec.age,
                                        agent.spec.gender, trait_rng,
                                        config_.values_survey.ipsatize);
      } else {
        agent.traits = random_big5(trait_rng);
      }
      TeeLlm tee(*llm_, sinks[static_cast<std::size_t>(i)]);
      FormativeMemories formative = generate_formative_memories(
          agent.spec, agent.traits, config_.shared_context, candidates_, tee,
          clock_.start);
      agent.backstory = formative.backstory;
      for (auto& record : formative.memories)
        agent.memories.append(std::move(record));
    });
    for (auto& sink : sinks)
      transcript_.insert(transcript_.end(), sink.begin(), sink.end());

    std::vector<AccountId> account_order;
    account_order.reserve(agents_.size());
    for (const auto& agent : agents_) account_order.push_back(agent.account);
    Pcg32 graph_rng = derive_stream(root_seed_, "graph");
    init_follow_graph(emulator_, account_order, config_.candidate_indices(),
                      config_.graph, graph_rng);

    std::vector<IntroductionPrompt> intros;
    intros.reserve(agents_.size());
    for (const auto& agent : agents_) {
      std::string prompt = prompts::substitute(
          prompts::substitute(prompts::kIntroduction, "{persona}",
                              agent.persona_header()),
          "{name}", agent.spec.name);
      intros.push_back({agent.account, agent.spec.name, prompt});
    }
    TeeLlm intro_tee(*llm_, transcript_);
    post_introductions(emulator_, intro_tee, intros);

    schedule_ = build_schedule(config_, root_seed_);
    for (const auto& agent : agents_) {
      activity_streams_.push_back(
          derive_stream(root_seed_, "activity/" + agent.spec.name));
      session_streams_.push_back(
          derive_stream(root_seed_, "session/" + agent.spec.name));
    }

    episode_next_ = 0;
    persist_progress();
  }

  // ----- episode loop -----------------------------------------------------

  RunArtifacts run_episodes() {
    try {
      while (episode_next_ < config_.episodes_per_day) {
        int episode = episode_next_;
        run_one_episode(episode);
        episode_next_ = episode + 1;
        persist_progress();
        if (options_.stop_after_episode >= 0 &&
            episode >= options_.stop_after_episode) {
          write_manifest();  // interrupted on purpose; no export yet
          return assemble_artifacts();
        }
      }
    } catch (...) {
      // Keep the manifest on disk even for aborted runs; the checkpoint from
      // the last completed episode stays valid.
      try {
        write_manifest();
      } catch (...) {
      }
      throw;
    }
    RunArtifacts artifacts = assemble_artifacts();
    if (!options_.out_dir.empty()) {
      auto written = export_artifacts(artifacts, options_.out_dir);
      artifacts.manifest.artifacts.insert(artifacts.manifest.artifacts.end(),
                                          written.begin(), written.end());
      write_manifest(artifacts.manifest);
    }
    return artifacts;
  }

  void run_one_episode(int episode) {
    emulator_.set_episode(episode);
    SimTime now = clock_.at_episode(episode);
    int n = config_.num_agents();

    // (a) activity draws, serial in agent order
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      if (is_active(schedule_, i, episode,
                    activity_streams_[static_cast<std::size_t>(i)]))
        active.push_back(i);
    }

    // (b) perceive/decide concurrently against the frozen platform
    SessionOptions session_options;
    session_options.feed_window = config_.feed_window;
    session_options.max_actions = config_.max_actions_per_session;
    session_options.usage_instructions = config_.mastodon_usage_instructions;
    for (const auto& agent : agents_)
      session_options.known_accounts.push_back(agent.account);

    std::vector<SessionDecision> decisions(active.size());
    parallel_for(static_cast<int>(active.size()), options_.workers, [&](int k) {
      int i = active[static_cast<std::size_t>(k)];
      decisions[static_cast<std::size_t>(k)] = decide_app_session(
          agents_[static_cast<std::size_t>(i)], emulator_, candidates_, *llm_,
          session_streams_[static_cast<std::size_t>(i)], now, session_options);
    });

    // (c) effects applied in ascending agent index
    for (std::size_t k = 0; k < active.size(); ++k) {
      int i = active[k];
      apply_app_actions(agents_[static_cast<std::size_t>(i)], emulator_,
                        decisions[k].actions, now);
    }
    for (auto& decision : decisions)
      transcript_.insert(transcript_.end(), decision.exchanges.begin(),
                         decision.exchanges.end());

    // (d) longitudinal survey of every agent
    std::vector<SurveyRecord> records(static_cast<std::size_t>(n));
    std::vector<std::vector<TranscriptEntry>> sinks(
        static_cast<std::size_t>(n));
    parallel_for(n, options_.workers, [&](int i) {
      TeeLlm tee(*llm_, sinks[static_cast<std::size_t>(i)]);
      records[static_cast<std::size_t>(i)] = survey_agent(
          agents_[static_cast<std::size_t>(i)], candidates_, tee, episode);
    });
    for (auto& sink : sinks)
      transcript_.insert(transcript_.end(), sink.begin(), sink.end());
    if (config_.analytics.surveys_write_memories) {
      for (int i = 0; i < n; ++i) {
        const auto& record = records[static_cast<std::size_t>(i)];
        agents_[static_cast<std::size_t>(i)].memories.append(
            {now, "Survey answer: would vote for " + record.vote,
             static_cast<std::uint8_t>(MemoryTag::survey), 0.0});
      }
    }

    // (e) analytics snapshot
    std::set<AccountId> active_accounts;
    for (int i : active)
      active_accounts.insert(agents_[static_cast<std::size_t>(i)].account);
    analytics_.push_back(aggregate(records, episode,
                                   emulator_.events_for_episode(episode),
                                   emulator_.follow_graph(), active_accounts,
                                   candidates_, config_.agents,
                                   config_.analytics));
    surveys_.insert(surveys_.end(), records.begin(), records.end());
  }

  // ----- persistence ------------------------------------------------------

  void open_output_streams(bool fresh) {
    if (options_.out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(options_.out_dir, ec);
    if (!fs::is_directory(options_.out_dir))
      throw PlatformError("cannot create run directory '" + options_.out_dir +
                          "'");
    auto mode = std::ios::binary | (fresh ? std::ios::trunc : std::ios::app);
    events_out_.open(fs::path(options_.out_dir) / kEventLogFile, mode);
    transcript_out_.open(fs::path(options_.out_dir) / kTranscriptFile, mode);
    if (!events_out_ || !transcript_out_)
      throw PlatformError("cannot open artifact streams under '" +
                          options_.out_dir + "'");
  }

  void persist_progress() {
    if (options_.out_dir.empty()) return;
    const auto& events = emulator_.events();
    for (; events_persisted_ < events.size(); ++events_persisted_)
      events_out_ << event_to_line(events[events_persisted_]) << "\n";
    events_out_.flush();
    for (; transcript_persisted_ < transcript_.size(); ++transcript_persisted_)
      transcript_out_ << transcript_entry_to_json(
                             transcript_[transcript_persisted_])
                             .dump()
                      << "\n";
    transcript_out_.flush();
    atomic_write(fs::path(options_.out_dir) / kCheckpointFile,
                 checkpoint_json());
  }

  std::string checkpoint_json() const {
    Json j;
    j["version"] = kCheckpointVersion;
    j["config_hash"] = options_.config_hash;
    j["root_seed"] = root_seed_;
    BackendInfo info = backend_info(*llm_);
    j["backend"] = {{"kind", info.kind},
                    {"identity", info.identity},
                    {"rules_path", info.rules_path},
                    {"rules_hash", info.rules_hash}};
    j["episode_next"] = episode_next_;
    j["event_count"] = emulator_.events().size();
    j["transcript_count"] = transcript_.size();
    j["config"] = Json::parse(scenario_to_json_text(config_));

    Json slots = Json::array();
    for (const auto& agent_slots : schedule_.slots) slots.push_back(agent_slots);
    j["schedule"] = slots;

    Json activity = Json::array();
    for (const auto& rng : activity_streams_) activity.push_back(rng_to_json(rng));
    j["activity_streams"] = activity;
    Json session = Json::array();
    for (const auto& rng : session_streams_) session.push_back(rng_to_json(rng));
    j["session_streams"] = session;

    if (auto* scripted = dynamic_cast<ScriptedBackend*>(llm_))
      j["scripted_counters"] = scripted->counters();

    Json agents = Json::array();
    for (const auto& agent : agents_) {
      Json a;
      a["name"] = agent.spec.name;
      a["account"] = agent.account;
      a["last_seen_toot"] = agent.last_seen_toot;
      a["traits"] = traits_to_json(agent.traits);
      a["backstory"] = agent.backstory;
      Json opinions;
      for (const auto& [candidate, cached] : agent.opinions)
        opinions[candidate] = {{"text", cached.text},
                               {"memory_count", cached.memory_count}};
      a["opinions"] = opinions;
      Json memories = Json::array();
      for (const auto& record : agent.memories.records())
        memories.push_back(Json::array(
            {record.timestamp, record.text, record.tags, record.importance}));
      a["memories"] = memories;
      agents.push_back(std::move(a));
    }
    j["agents"] = agents;

    Json surveys = Json::array();
    for (const auto& record : surveys_) surveys.push_back(survey_to_json(record));
    j["surveys"] = surveys;
    Json analytics = Json::array();
    for (const auto& snapshot : analytics_)
      analytics.push_back(analytics_to_json(snapshot));
    j["analytics"] = analytics;

    std::string unsigned_text = j.dump(2);
    j["content_hash"] = hash_bytes_hex(unsigned_text);
    return j.dump(2) + "\n";
  }

  void restore(const Json& checkpoint, const fs::path& run_dir) {
    options_.out_dir = run_dir.string();
    options_.config_hash = checkpoint.at("config_hash").get<std::string>();

    episode_next_ = checkpoint.at("episode_next").get<int>();
    std::size_t event_count = checkpoint.at("event_count").get<std::size_t>();
    std::size_t transcript_count =
        checkpoint.at("transcript_count").get<std::size_t>();

    schedule_.slots.clear();
    schedule_.stochastic_rate = config_.scheduler.stochastic_rate;
    for (const auto& agent_slots : checkpoint.at("schedule"))
      schedule_.slots.push_back(agent_slots.get<std::vector<int>>());

    activity_streams_.clear();
    for (const auto& rng : checkpoint.at("activity_streams"))
      activity_streams_.push_back(rng_from_json(rng));
    session_streams_.clear();
    for (const auto& rng : checkpoint.at("session_streams"))
      session_streams_.push_back(rng_from_json(rng));

    if (checkpoint.contains("scripted_counters")) {
      if (auto* scripted = dynamic_cast<ScriptedBackend*>(llm_)) {
        scripted->restore_counters(
            checkpoint.at("scripted_counters")
                .get<std::map<std::string, std::uint64_t>>());
      }
    }

    agents_.clear();
    int index = 0;
    for (const auto& a : checkpoint.at("agents")) {
      AgentState agent;
      agent.index = index;
      agent.spec = config_.agents[static_cast<std::size_t>(index)];
      if (agent.spec.name != a.at("name").get<std::string>())
        throw ConfigError("checkpoint agent order does not match config");
      agent.account = a.at("account").get<std::string>();
      agent.last_seen_toot = a.at("last_seen_toot").get<TootId>();
      agent.traits = traits_from_json(a.at("traits"));
      agent.backstory = a.at("backstory").get<std::string>();
      for (const auto& [candidate, cached] : a.at("opinions").items()) {
        agent.opinions[candidate] = {
            cached.at("text").get<std::string>(),
            cached.at("memory_count").get<std::size_t>()};
      }
      for (const auto& record : a.at("memories")) {
        agent.memories.append({record.at(0).get<SimTime>(),
                               record.at(1).get<std::string>(),
                               record.at(2).get<std::uint8_t>(),
                               record.at(3).get<double>()});
      }
      agents_.push_back(std::move(agent));
      ++index;
    }

    surveys_.clear();
    for (const auto& record : checkpoint.at("surveys"))
      surveys_.push_back(survey_from_json(record));
    analytics_.clear();
    for (const auto& snapshot : checkpoint.at("analytics"))
      analytics_.push_back(analytics_from_json(snapshot));

    // Rebuild platform state from the event log; drop any lines written after
    // the checkpointed counts (a partially executed episode).
    fs::path events_path = run_dir / kEventLogFile;
    auto event_lines = read_lines(events_path, "event log");
    if (event_lines.size() < event_count)
      throw ConfigError("event log is shorter than the checkpoint expects");
    event_lines.resize(event_count);
    std::vector<PlatformEvent> events;
    events.reserve(event_lines.size());
    for (const auto& line : event_lines)
      events.push_back(event_from_line(line));
    emulator_.replay(events);
    {
      std::ostringstream content;
      for (const auto& line : event_lines) content << line << "\n";
      atomic_write(events_path, content.str());
    }
    events_persisted_ = event_count;

    fs::path transcript_path = run_dir / kTranscriptFile;
    auto transcript_lines = read_lines(transcript_path, "transcript");
    if (transcript_lines.size() < transcript_count)
      throw ConfigError("transcript is shorter than the checkpoint expects");
    transcript_lines.resize(transcript_count);
    transcript_.clear();
    for (const auto& line : transcript_lines)
      transcript_.push_back(transcript_entry_from_json(Json::parse(line)));
    {
      std::ostringstream content;
      for (const auto& line : transcript_lines) content << line << "\n";
      atomic_write(transcript_path, content.str());
    }
    transcript_persisted_ = transcript_count;

    open_output_streams(/*fresh=*/false);
  }

  // ----- artifacts ---------------------------------------------------------

  RunManifest make_manifest() const {
    RunManifest manifest;
    manifest.config_hash = options_.config_hash;
    manifest.root_seed = root_seed_;
    manifest.backend = llm_->identity();
    manifest.variant = to_string(config_.variant);
    manifest.num_agents = config_.num_agents();
    manifest.first_episode = 0;
    manifest.final_episode = episode_next_;
    manifest.artifacts = {kEventLogFile, kTranscriptFile, kCheckpointFile};
    return manifest;
  }

  void write_manifest() { write_manifest(make_manifest()); }

  void write_manifest(const RunManifest& manifest) {
    if (options_.out_dir.empty()) return;
    atomic_write(fs::path(options_.out_dir) / kManifestFile,
                 manifest.to_json_text());
  }

  RunArtifacts assemble_artifacts() const {
    RunArtifacts artifacts;
    artifacts.events = emulator_.events();
    artifacts.surveys = surveys_;
    artifacts.analytics = analytics_;
    artifacts.transcript = transcript_;
    artifacts.manifest = make_manifest();
    artifacts.agent_specs = config_.agents;
    artifacts.candidates = candidates_;
    for (const auto& agent : agents_)
      artifacts.account_of[agent.spec.name] = agent.account;
    artifacts.episodes_per_day = config_.episodes_per_day;
    return artifacts;
  }

  ScenarioConfig config_;
  LlmBackend* llm_;
  EngineOptions options_;
  std::uint64_t root_seed_;
  SimClock clock_;
  Emulator emulator_;
  std::vector<CandidateInfo> candidates_;
  std::vector<AgentState> agents_;
  EpisodeSchedule schedule_;
  std::vector<Pcg32> activity_streams_;
  std::vector<Pcg32> session_streams_;
  std::vector<SurveyRecord> surveys_;
  std::vector<AnalyticsSnapshot> analytics_;
  std::vector<TranscriptEntry> transcript_;
  int episode_next_ = 0;

  std::ofstream events_out_;
  std::ofstream transcript_out_;
  std::size_t events_persisted_ = 0;
  std::size_t transcript_persisted_ = 0;
};

Json load_checkpoint_json(const fs::path& path) {
  std::string text = read_text_file(path, "checkpoint");
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("checkpoint parse error: ") + e.what());
  }
  if (!j.contains("content_hash"))
    throw ConfigError("checkpoint is missing its content hash");
  std::string stored = j.at("content_hash").get<std::string>();
  j.erase("content_hash");
  if (hash_bytes_hex(j.dump(2)) != stored)
    throw ConfigError("checkpoint integrity hash mismatch (corrupt file)");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw ConfigError("checkpoint version mismatch");
  return j;
}

}  // namespace

RunArtifacts run_simulation(const ScenarioConfig& config, LlmBackend& llm,
                            const EngineOptions& options) {
  EngineRun run(config, llm, options);
  return run.run_fresh();
}

RunArtifacts resume_simulation(const std::string& checkpoint_path,
                               LlmBackend& llm, const EngineOptions& options) {
  fs::path path = fs::absolute(checkpoint_path);
  Json checkpoint = load_checkpoint_json(path);
  ScenarioConfig config =
      scenario_from_json_text(checkpoint.at("config").dump());
  EngineOptions run_options = options;
  run_options.has_seed_override = true;
  run_options.seed_override = checkpoint.at("root_seed").get<std::uint64_t>();
  EngineRun run(config, llm, run_options);
  return run.run_resumed(checkpoint, path.parent_path());
}

RunArtifacts resume_from_checkpoint(const std::string& checkpoint_path,
                                    const EngineOptions& options) {
  Json checkpoint = load_checkpoint_json(checkpoint_path);
  const Json& backend = checkpoint.at("backend");
  std::string kind = backend.at("kind").get<std::string>();
  if (kind == "scripted") {
    std::string rules_path = backend.at("rules_path").get<std::string>();
    if (rules_path.empty())
      throw BackendError(
          "checkpoint has no scripted rules path; resume via the library "
          "API with an explicit backend");
    ScriptedBackend scripted = ScriptedBackend::from_file(rules_path);
    if (scripted.rules_hash() != backend.at("rules_hash").get<std::string>())
      throw BackendError("scripted rules file changed since the checkpoint "
                         "was written (hash mismatch)");
    return resume_simulation(checkpoint_path, scripted, options);
  }
  if (kind == "remote") {
    RemoteBackend remote(RemoteBackend::config_from_env());
    return resume_simulation(checkpoint_path, remote, options);
  }
  throw BackendError("checkpoint backend kind '" + kind +
                     "' cannot be rebuilt by the CLI");
}

RunArtifacts load_artifacts(const std::string& checkpoint_path) {
  fs::path path = fs::absolute(checkpoint_path);
  Json checkpoint = load_checkpoint_json(path);
  ScenarioConfig config =
      scenario_from_json_text(checkpoint.at("config").dump());

  // A null backend: reloading never issues completions.
  class NullBackend final : public LlmBackend {
   public:
    std::string identity() const override { return identity_; }
    void set_identity(std::string identity) { identity_ = std::move(identity); }

   protected:
    std::string complete_impl(const CompletionRequest&) override {
      throw BackendError("reloaded artifacts cannot issue completions");
    }

   private:
    std::string identity_ = "none";
  };
  NullBackend backend;
  backend.set_identity(
      checkpoint.at("backend").at("identity").get<std::string>());

  EngineOptions options;
  options.has_seed_override = true;
  options.seed_override = checkpoint.at("root_seed").get<std::uint64_t>();
  EngineRun run(config, backend, options);
  return run.reload_only(checkpoint, path.parent_path());
}

}  // namespace storsim
