#include "storsim/llm.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/prompts.hpp"
#include "storsim/scenario.hpp"

namespace storsim {

using Json = nlohmann::ordered_json;

const char* to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::anecdote: return "anecdote";
    case PromptKind::backstory: return "backstory";
    case PromptKind::opinion: return "opinion";
    case PromptKind::current_opinion: return "current_opinion";
    case PromptKind::perception_plan: return "perception_plan";
    case PromptKind::malicious_plan: return "malicious_plan";
    case PromptKind::app_action: return "app_action";
    case PromptKind::toot_content: return "toot_content";
    case PromptKind::vote_poll: return "vote_poll";
    case PromptKind::favorability_poll: return "favorability_poll";
  }
  return "app_action";
}

std::optional<PromptKind> prompt_kind_from_string(const std::string& name) {
  for (int i = 0; i < kPromptKindCount; ++i) {
    auto kind = static_cast<PromptKind>(i);
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::string LlmBackend::complete(const CompletionRequest& request) {
  if (request.prompt_text.empty())
    throw BackendError("completion request with empty prompt_text");
  std::string response = complete_impl(request);
  if (request.max_chars > 0 &&
      response.size() > static_cast<std::size_t>(request.max_chars)) {
    response.resize(request.max_chars);
  }
  std::lock_guard<std::mutex> lock(mutex_);
  if (recording_) log_.push_back({request, response});
  return response;
}

std::vector<TranscriptEntry> LlmBackend::transcript() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

std::size_t LlmBackend::transcript_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_.size();
}

void LlmBackend::set_recording(bool enabled) {
  std::lock_guard<std::mutex> lock(mutex_);
  recording_ = enabled;
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

namespace {

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::vector<ScriptedRule> parse_scripted_rules(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("scripted rules parse error: ") + e.what());
  }
  const Json* rules_json = &j;
  if (j.is_object()) {
    if (!j.contains("rules"))
      throw ConfigError("scripted rules file: missing 'rules' array");
    rules_json = &j.at("rules");
  }
  if (!rules_json->is_array())
    throw ConfigError("scripted rules must be an array");

  std::vector<ScriptedRule> rules;
  for (const auto& r : *rules_json) {
    ScriptedRule rule;
    if (r.contains("kind") && !r.at("kind").is_null()) {
      std::string kind = r.at("kind").get<std::string>();
      if (kind != "*") {
        auto parsed = prompt_kind_from_string(kind);
        if (!parsed)
          throw ConfigError("scripted rule with unknown prompt kind '" + kind + "'");
        rule.kind = *parsed;
      }
    }
    if (r.contains("agent")) rule.agent = r.at("agent").get<std::string>();
    if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
    if (!r.contains("responses") || !r.at("responses").is_array() ||
        r.at("responses").empty())
      throw ConfigError("scripted rule needs a non-empty 'responses' array");
    for (const auto& resp : r.at("responses"))
      rule.responses.push_back(resp.get<std::string>());
    rules.push_back(std::move(rule));
  }
  return rules;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules)
    : rules_(std::move(rules)) {
  for (int i = 0; i < kPromptKindCount; ++i) {
    auto kind = static_cast<PromptKind>(i);
    bool has_fallback = false;
    for (const auto& rule : rules_) {
      bool kind_matches = !rule.kind.has_value() || *rule.kind == kind;
      if (kind_matches && rule.agent.empty() && rule.contains.empty()) {
        has_fallback = true;
        break;
      }
    }
    if (!has_fallback)
      throw ConfigError(std::string("scripted rules: no fallback rule for "
                                    "prompt kind '") + to_string(kind) + "'");
  }
  // Identity for rule sets built in code: hash of a canonical dump.
  std::ostringstream dump;
  for (const auto& rule : rules_) {
    dump << (rule.kind ? to_string(*rule.kind) : "*") << '\x1f' << rule.agent
         << '\x1f' << rule.contains << '\x1f';
    for (const auto& r : rule.responses) dump << r << '\x1e';
    dump << '\n';
  }
  rules_hash_ = hash_bytes_hex(dump.str());
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules,
                                 std::string source_path,
                                 std::string rules_hash)
    : ScriptedBackend(std::move(rules)) {
  source_path_ = std::move(source_path);
  rules_hash_ = std::move(rules_hash);
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::string text = read_file(path, "scripted rules file");
  return ScriptedBackend(parse_scripted_rules(text), path,
                         hash_bytes_hex(text));
}

std::string ScriptedBackend::identity() const {
  return "scripted:" + rules_hash_;
}

std::map<std::string, std::uint64_t> ScriptedBackend::counters() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return counters_;
}

void ScriptedBackend::restore_counters(
    const std::map<std::string, std::uint64_t>& counters) {
  std::lock_guard<std::mutex> lock(mutex_);
  counters_ = counters;
}

std::string ScriptedBackend::complete_impl(const CompletionRequest& request) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const ScriptedRule& rule = rules_[i];
    if (rule.kind && *rule.kind != request.kind) continue;
    if (!rule.agent.empty() && rule.agent != request.agent_name) continue;
    if (!rule.contains.empty() &&
        request.prompt_text.find(rule.contains) == std::string::npos)
      continue;

    std::uint64_t count;
    {
      // Cycle positions are per (rule, agent) so concurrent sessions of
      // distinct agents cannot perturb each other's response sequence.
      std::lock_guard<std::mutex> lock(mutex_);
      count = counters_[std::to_string(i) + ":" + request.agent_name]++;
    }
    const std::string& raw = rule.responses[count % rule.responses.size()];
    return prompts::substitute(raw, "{agent}", request.agent_name);
  }
  throw BackendError(std::string("no scripted rule matches request (kind=") +
                     to_string(request.kind) + ", agent=" +
                     request.agent_name + ")");
}

}  // namespace storsim
