#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace storsim {

enum class PromptKind {
  anecdote,
  backstory,
  opinion,
  current_opinion,
  perception_plan,
  malicious_plan,
  app_action,
  toot_content,
  vote_poll,
  favorability_poll,
};

inline constexpr int kPromptKindCount = 10;
const char* to_string(PromptKind kind);
std::optional<PromptKind> prompt_kind_from_string(const std::string& name);

struct CompletionRequest {
  PromptKind kind = PromptKind::app_action;
  std::string agent_name;
  std::string prompt_text;
  int max_chars = 0;  // 0: no truncation
};

struct TranscriptEntry {
  CompletionRequest request;
  std::string response;
};

/// Uniform completion interface. complete() validates the request, dispatches
/// to the concrete backend, truncates to max_chars, and (when recording)
/// appends to the transcript. Safe to call from many workers; the transcript
/// records entries in completion order.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  std::string complete(const CompletionRequest& request);

  std::vector<TranscriptEntry> transcript() const;
  std::size_t transcript_size() const;
  void set_recording(bool enabled);

  /// Stable identity for the run manifest, e.g. "scripted:<rules-hash>".
  virtual std::string identity() const = 0;

 protected:
  virtual std::string complete_impl(const CompletionRequest& request) = 0;

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptEntry> log_;
  bool recording_ = true;
};

/// Pass-through backend that additionally appends each exchange to a local
/// sink. The engine gives every agent task its own TeeLlm so the run
/// transcript can be assembled in deterministic agent order no matter how
/// many workers are live.
class TeeLlm final : public LlmBackend {
 public:
  TeeLlm(LlmBackend& base, std::vector<TranscriptEntry>& sink)
      : base_(base), sink_(&sink) {
    set_recording(false);
  }
  std::string identity() const override { return base_.identity(); }

 protected:
  std::string complete_impl(const CompletionRequest& request) override {
    std::string response = base_.complete(request);
    sink_->push_back({request, response});
    return response;
  }

 private:
  LlmBackend& base_;
  std::vector<TranscriptEntry>* sink_;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// One routing rule. Empty kind matches every prompt kind; empty agent/
/// contains match anything. Responses cycle per (rule, requesting agent), so
/// concurrent sessions of distinct agents stay deterministic. "{agent}" in a
/// response is replaced with the requesting agent's name.
struct ScriptedRule {
  std::optional<PromptKind> kind;
  std::string agent;
  std::string contains;
  std::vector<std::string> responses;
};

class ScriptedBackend : public LlmBackend {
 public:
  /// Validates that every prompt kind has an unconditional fallback rule.
  explicit ScriptedBackend(std::vector<ScriptedRule> rules);

  /// Loads rules from a JSON file ("//" comments allowed).
  static ScriptedBackend from_file(const std::string& path);

  std::string identity() const override;

  const std::vector<ScriptedRule>& rules() const { return rules_; }

  /// Cyclic-response positions, serialized for checkpoints as
  /// "rule_index:agent" -> count.
  std::map<std::string, std::uint64_t> counters() const;
  void restore_counters(const std::map<std::string, std::uint64_t>& counters);

  const std::string& source_path() const { return source_path_; }
  const std::string& rules_hash() const { return rules_hash_; }

 protected:
  std::string complete_impl(const CompletionRequest& request) override;

 private:
  ScriptedBackend(std::vector<ScriptedRule> rules, std::string source_path,
                  std::string rules_hash);

  std::vector<ScriptedRule> rules_;
  std::string source_path_;
  std::string rules_hash_;
  mutable std::mutex mutex_;
  std::map<std::string, std::uint64_t> counters_;
};

std::vector<ScriptedRule> parse_scripted_rules(const std::string& json_text);

// ---------------------------------------------------------------------------
// Remote backend
// ---------------------------------------------------------------------------

/// Requests-per-minute ceiling over a sliding window. The clock and sleeper
/// are injectable so the policy is testable without wall-clock waits.
class RateLimiter {
 public:
  using Clock = std::function<double()>;          // seconds, monotonic
  using Sleeper = std::function<void(double)>;    // seconds

  RateLimiter(int max_requests, double window_seconds);
  RateLimiter(int max_requests, double window_seconds, Clock clock,
              Sleeper sleeper);

  /// Blocks until issuing one more request keeps the window under the
  /// ceiling, then records the request.
  void acquire();

 private:
  int max_requests_;
  double window_seconds_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mutex_;
  std::deque<double> issued_;
};

struct RemoteBackendConfig {
  std::string endpoint;  // e.g. "https://api.openai.com/v1/chat/completions"
  std::string model;
  std::string api_key_env = "STORSIM_LLM_API_KEY";
  double temperature = 1.0;
  int max_retries = 3;
  double backoff_initial_seconds = 0.5;
  double backoff_cap_seconds = 8.0;
  int requests_per_minute = 60;
  int timeout_seconds = 60;
};

/// Generic chat-completion HTTP JSON client. Retries transient failures
/// (connection errors, 429, 5xx) with exponential backoff and enforces the
/// requests-per-minute ceiling.
class RemoteBackend : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config);
  RemoteBackend(RemoteBackendConfig config, RateLimiter::Clock clock,
                RateLimiter::Sleeper sleeper);

  std::string identity() const override;

  /// Reads endpoint/model/decoding settings from STORSIM_LLM_* environment
  /// variables. Throws BackendError if the endpoint or model is unset.
  static RemoteBackendConfig config_from_env();

  std::uint64_t total_retries() const;
  std::uint64_t total_requests() const;

 protected:
  std::string complete_impl(const CompletionRequest& request) override;

 private:
  RemoteBackendConfig config_;
  std::string api_key_;
  RateLimiter limiter_;
  RateLimiter::Sleeper sleeper_;
  mutable std::mutex stats_mutex_;
  std::uint64_t retries_ = 0;
  std::uint64_t requests_ = 0;
};

}  // namespace storsim
