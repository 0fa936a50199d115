#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "storsim/llm.hpp"

namespace storsim::testing {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "storsim") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

/// Scripted rules with an unconditional fallback for every prompt kind,
/// enough to drive a full engine run.
inline std::vector<ScriptedRule> default_rules() {
  auto rule = [](PromptKind kind, std::vector<std::string> responses) {
    ScriptedRule r;
    r.kind = kind;
    r.responses = std::move(responses);
    return r;
  };
  return {
      rule(PromptKind::anecdote,
           {"I grew up near the Avonlea River docks.\n"
            "One summer I worked double shifts at the textile mill.\n"
            "I still remember the flood of '09 and the cleanup after."}),
      rule(PromptKind::backstory,
           {"{agent} has lived in Storhampton their whole life, working "
            "steady jobs and caring about the town's future."}),
      rule(PromptKind::opinion, {"I think they have potential, but I want "
                                 "specifics on jobs and services."}),
      rule(PromptKind::current_opinion,
           {"Still weighing recent events, but my view is slowly shifting."}),
      rule(PromptKind::perception_plan,
           {"Hold a town hall, answer questions directly, and post daily "
            "updates about the campaign."}),
      rule(PromptKind::malicious_plan,
           {"Flood the feed with praise for the favored candidate and sow "
            "doubt about the opponent."}),
      rule(PromptKind::app_action,
           {"post: Thinking about the election over coffee.",
            "do_nothing",
            "post: Storhampton deserves better roads and honest answers."}),
      rule(PromptKind::toot_content,
           {"Hello Storhampton! {agent} here, glad to join the conversation."}),
      rule(PromptKind::vote_poll, {"Bill", "Bradley", "neither"}),
      rule(PromptKind::favorability_poll, {"7", "5", "8", "4"}),
  };
}

inline std::string default_rules_json() {
  std::ostringstream out;
  out << "{\n  \"rules\": [\n";
  auto entry = [&](const char* kind, const char* responses) {
    out << "    {\"kind\": \"" << kind << "\", \"responses\": [" << responses
        << "]},\n";
  };
  entry("anecdote",
        "\"I grew up near the Avonlea River docks.\\nOne summer I worked "
        "double shifts at the textile mill.\"");
  entry("backstory",
        "\"{agent} has lived in Storhampton their whole life.\"");
  entry("opinion", "\"I think they have potential.\"");
  entry("current_opinion", "\"Still weighing recent events.\"");
  entry("perception_plan", "\"Hold a town hall and post daily updates.\"");
  entry("malicious_plan", "\"Flood the feed with praise for Bill.\"");
  entry("app_action",
        "\"post: Thinking about the election over coffee.\", \"do_nothing\"");
  entry("toot_content", "\"Hello Storhampton! {agent} here.\"");
  entry("vote_poll", "\"Bill\", \"Bradley\", \"neither\"");
  out << "    {\"kind\": \"favorability_poll\", \"responses\": [\"7\"]}\n"
      << "  ]\n}\n";
  return out.str();
}

}  // namespace storsim::testing
