#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <thread>

#include "storsim/errors.hpp"
#include "storsim/llm.hpp"
#include "test_util.hpp"

using namespace storsim;

namespace {

CompletionRequest request_of(PromptKind kind, const std::string& agent,
                             const std::string& prompt = "prompt") {
  CompletionRequest request;
  request.kind = kind;
  request.agent_name = agent;
  request.prompt_text = prompt;
  return request;
}

std::vector<ScriptedRule> routing_rules() {
  auto rules = storsim::testing::default_rules();
  ScriptedRule alice;
  alice.kind = PromptKind::vote_poll;
  alice.agent = "Alice";
  alice.responses = {"Bradley", "Bill"};
  rules.insert(rules.begin(), alice);
  return rules;
}

}  // namespace

TEST_CASE("scripted rules cycle per rule and agent, first match wins") {
  ScriptedBackend llm(routing_rules());
  CHECK(llm.complete(request_of(PromptKind::vote_poll, "Alice")) == "Bradley");
  CHECK(llm.complete(request_of(PromptKind::vote_poll, "Alice")) == "Bill");
  CHECK(llm.complete(request_of(PromptKind::vote_poll, "Alice")) == "Bradley");
  // Other agents fall through to the generic vote rule.
  CHECK(llm.complete(request_of(PromptKind::vote_poll, "Bob")) == "Bill");
}

TEST_CASE("scripted fallback serves every agent") {
  ScriptedBackend llm(storsim::testing::default_rules());
  CHECK(llm.complete(request_of(PromptKind::favorability_poll, "Anyone")) == "7");
  CHECK(llm.complete(request_of(PromptKind::favorability_poll, "Someone Else")) == "7");
}

TEST_CASE("scripted substring routing") {
  auto rules = storsim::testing::default_rules();
  ScriptedRule recent;
  recent.kind = PromptKind::current_opinion;
  recent.contains = "recent events";
  recent.responses = {"My view changed because of what just happened."};
  rules.insert(rules.begin(), recent);
  ScriptedBackend llm(rules);
  CHECK(llm.complete(request_of(PromptKind::current_opinion, "A",
                                "consider recent events please")) ==
        "My view changed because of what just happened.");
  CHECK(llm.complete(request_of(PromptKind::current_opinion, "A",
                                "nothing new here")) ==
        "Still weighing recent events, but my view is slowly shifting.");
}

TEST_CASE("scripted {agent} placeholder substitution") {
  ScriptedBackend llm(storsim::testing::default_rules());
  CHECK(llm.complete(request_of(PromptKind::backstory, "Ada Quine")) ==
        "Ada Quine has lived in Storhampton their whole life, working steady "
        "jobs and caring about the town's future.");
}

TEST_CASE("rules without a fallback for some kind are a configuration error") {
  std::vector<ScriptedRule> rules;
  ScriptedRule only_votes;
  only_votes.kind = PromptKind::vote_poll;
  only_votes.responses = {"Bill"};
  rules.push_back(only_votes);
  CHECK_THROWS_WITH_AS(ScriptedBackend{rules}, doctest::Contains("fallback"),
                       ConfigError);
}

TEST_CASE("rules files parse, hash, and reject malformed input") {
  storsim::testing::TempDir dir;
  storsim::testing::spit(dir.path() / "rules.json",
                         storsim::testing::default_rules_json());
  ScriptedBackend llm =
      ScriptedBackend::from_file((dir.path() / "rules.json").string());
  CHECK(llm.identity().rfind("scripted:", 0) == 0);
  CHECK(llm.complete(request_of(PromptKind::vote_poll, "X")) == "Bill");

  storsim::testing::spit(dir.path() / "bad.json", "[{\"kind\": \"nope\"}]");
  CHECK_THROWS_AS(ScriptedBackend::from_file((dir.path() / "bad.json").string()),
                  ConfigError);
}

TEST_CASE("transcript records calls in order; counters restore for resume") {
  ScriptedBackend llm(storsim::testing::default_rules());
  CHECK(llm.transcript().empty());
  llm.complete(request_of(PromptKind::vote_poll, "A"));
  llm.complete(request_of(PromptKind::vote_poll, "A"));
  llm.complete(request_of(PromptKind::opinion, "B"));
  auto log = llm.transcript();
  REQUIRE(log.size() == 3);
  CHECK(log[0].response == "Bill");
  CHECK(log[1].response == "Bradley");
  CHECK(log[0].request.agent_name == "A");
  CHECK(log[2].request.kind == PromptKind::opinion);

  // A second backend with restored counters continues the cycle.
  ScriptedBackend resumed(storsim::testing::default_rules());
  resumed.restore_counters(llm.counters());
  CHECK(resumed.complete(request_of(PromptKind::vote_poll, "A")) == "neither");
}

TEST_CASE("identical rules and call sequences replay bit-exactly") {
  ScriptedBackend a(storsim::testing::default_rules());
  ScriptedBackend b(storsim::testing::default_rules());
  for (int i = 0; i < 20; ++i) {
    auto request = request_of(static_cast<PromptKind>(i % kPromptKindCount),
                              "Agent" + std::to_string(i % 3));
    CHECK(a.complete(request) == b.complete(request));
  }
  auto ta = a.transcript();
  auto tb = b.transcript();
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i)
    CHECK(ta[i].response == tb[i].response);
}

TEST_CASE("responses are truncated to max_chars") {
  ScriptedBackend llm(storsim::testing::default_rules());
  auto request = request_of(PromptKind::opinion, "A");
  request.max_chars = 10;
  CHECK(llm.complete(request).size() == 10);
}

TEST_CASE("empty prompt is rejected") {
  ScriptedBackend llm(storsim::testing::default_rules());
  CHECK_THROWS_AS(llm.complete(request_of(PromptKind::opinion, "A", "")),
                  BackendError);
}

// ---------------------------------------------------------------------------
// Rate limiter (fake clock, no wall-clock waits)
// ---------------------------------------------------------------------------

TEST_CASE("rate limiter keeps any sliding window under the ceiling") {
  double now = 0.0;
  std::vector<double> issue_times;
  RateLimiter limiter(
      5, 60.0, [&] { return now; },
      [&](double seconds) { now += seconds; });
  for (int i = 0; i < 23; ++i) {
    limiter.acquire();
    issue_times.push_back(now);
    now += 0.5;  // caller pace: 2 requests/second
  }
  for (std::size_t i = 0; i < issue_times.size(); ++i) {
    int in_window = 0;
    for (double t : issue_times)
      if (t >= issue_times[i] && t < issue_times[i] + 60.0) ++in_window;
    CHECK(in_window <= 5);
  }
}

// ---------------------------------------------------------------------------
// Remote backend against a local fault-injecting HTTP server
// ---------------------------------------------------------------------------

namespace {

struct FaultServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> failures_left{0};
  std::atomic<int> hits{0};

  FaultServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      hits.fetch_add(1);
      if (failures_left.fetch_sub(1) > 0) {
        res.status = 500;
        res.set_content("{\"error\":\"transient\"}", "application/json");
        return;
      }
      auto body = nlohmann::json::parse(req.body);
      std::string prompt = body.at("messages").at(0).at("content");
      nlohmann::json reply = {
          {"choices",
           {{{"message",
              {{"role", "assistant"},
               {"content", "echo: " + prompt.substr(0, 16)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FaultServer() {
    server.stop();
    thread.join();
  }

  RemoteBackendConfig config() const {
    RemoteBackendConfig c;
    c.endpoint =
        "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.model = "test-model";
    c.max_retries = 3;
    c.requests_per_minute = 0;  // unlimited in tests
    return c;
  }
};

RateLimiter::Sleeper no_sleep() {
  return [](double) {};
}

}  // namespace

TEST_CASE("remote backend retries transient 5xx failures then succeeds") {
  FaultServer fault;
  fault.failures_left = 2;
  RemoteBackend llm(fault.config(), [] { return 0.0; }, no_sleep());
  auto request = request_of(PromptKind::opinion, "A", "hello remote");
  CHECK(llm.complete(request) == "echo: hello remote");
  CHECK(llm.total_retries() == 2);
  CHECK(fault.hits.load() == 3);
  CHECK(llm.identity() == "remote:test-model");
}

TEST_CASE("remote backend surfaces exhausted retries") {
  FaultServer fault;
  fault.failures_left = 100;
  auto config = fault.config();
  config.max_retries = 2;
  RemoteBackend llm(config, [] { return 0.0; }, no_sleep());
  CHECK_THROWS_AS(llm.complete(request_of(PromptKind::opinion, "A", "x")),
                  BackendError);
  CHECK(fault.hits.load() == 3);  // initial try + 2 retries
}

TEST_CASE("remote backend does not retry hard rejections") {
  FaultServer fault;
  fault.server.Post("/v1/other", [](const httplib::Request&, httplib::Response&) {});
  auto config = fault.config();
  config.endpoint =
      "http://127.0.0.1:" + std::to_string(fault.port) + "/missing";
  RemoteBackend llm(config, [] { return 0.0; }, no_sleep());
  CHECK_THROWS_AS(llm.complete(request_of(PromptKind::opinion, "A", "x")),
                  BackendError);
  // 404 is not transient: exactly one request.
  CHECK(fault.hits.load() == 0);
}
