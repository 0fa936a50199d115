#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/llm.hpp"

namespace storsim {

using Json = nlohmann::json;

namespace {

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void thread_sleep(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// "https://host[:port]/path" -> (scheme://host[:port], /path)
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw BackendError("endpoint URL must include a scheme: '" + url + "'");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

}  // namespace

RateLimiter::RateLimiter(int max_requests, double window_seconds)
    : RateLimiter(max_requests, window_seconds, steady_seconds, thread_sleep) {}

RateLimiter::RateLimiter(int max_requests, double window_seconds, Clock clock,
                         Sleeper sleeper)
    : max_requests_(max_requests),
      window_seconds_(window_seconds),
      clock_(std::move(clock)),
      sleeper_(std::move(sleeper)) {}

void RateLimiter::acquire() {
  if (max_requests_ <= 0) return;
  for (;;) {
    double wait = 0.0;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      double now = clock_();
      while (!issued_.empty() && now - issued_.front() >= window_seconds_)
        issued_.pop_front();
      if (static_cast<int>(issued_.size()) < max_requests_) {
        issued_.push_back(now);
        return;
      }
      wait = issued_.front() + window_seconds_ - now;
    }
    sleeper_(std::max(wait, 1e-3));
  }
}

RemoteBackendConfig RemoteBackend::config_from_env() {
  RemoteBackendConfig config;
  config.endpoint = env_or("STORSIM_LLM_ENDPOINT", "");
  config.model = env_or("STORSIM_LLM_MODEL", "");
  config.temperature = std::stod(env_or("STORSIM_LLM_TEMPERATURE", "1.0"));
  config.requests_per_minute =
      std::stoi(env_or("STORSIM_LLM_RPM", "60"));
  config.max_retries = std::stoi(env_or("STORSIM_LLM_MAX_RETRIES", "3"));
  if (config.endpoint.empty())
    throw BackendError("remote backend: STORSIM_LLM_ENDPOINT is not set");
  if (config.model.empty())
    throw BackendError("remote backend: STORSIM_LLM_MODEL is not set");
  return config;
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : RemoteBackend(std::move(config), steady_seconds, thread_sleep) {}

RemoteBackend::RemoteBackend(RemoteBackendConfig config,
                             RateLimiter::Clock clock,
                             RateLimiter::Sleeper sleeper)
    : config_(std::move(config)),
      limiter_(config_.requests_per_minute, 60.0, clock, sleeper),
      sleeper_(std::move(sleeper)) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  api_key_ = key ? key : "";
}

std::string RemoteBackend::identity() const {
  return "remote:" + config_.model;
}

std::uint64_t RemoteBackend::total_retries() const {
  std::lock_guard<std::mutex> lock(stats_mutex_);
  return retries_;
}

std::uint64_t RemoteBackend::total_requests() const {
  std::lock_guard<std::mutex> lock(stats_mutex_);
  return requests_;
}

std::string RemoteBackend::complete_impl(const CompletionRequest& request) {
  auto [origin, path] = split_endpoint(config_.endpoint);

  Json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["messages"] = Json::array(
      {Json{{"role", "user"}, {"content", request.prompt_text}}});
  if (request.max_chars > 0) {
    // Rough character->token bound; the hard cut happens in complete().
    body["max_tokens"] = std::max(16, request.max_chars / 2);
  }
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);

  double backoff = config_.backoff_initial_seconds;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::lock_guard<std::mutex> lock(stats_mutex_);
      ++retries_;
    }
    limiter_.acquire();
    {
      std::lock_guard<std::mutex> lock(stats_mutex_);
      ++requests_;
    }

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    auto result = client.Post(path, headers, payload, "application/json");

    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
    } else if (result->status >= 200 && result->status < 300) {
      try {
        Json response = Json::parse(result->body);
        return response.at("choices").at(0).at("message").at("content")
            .get<std::string>();
      } catch (const Json::exception& e) {
        throw BackendError(std::string("malformed completion response: ") +
                           e.what());
      }
    } else if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
    } else {
      throw BackendError("completion request rejected: HTTP " +
                         std::to_string(result->status) + " " + result->body);
    }

    if (attempt < config_.max_retries) {
      sleeper_(backoff);
      backoff = std::min(backoff * 2.0, config_.backoff_cap_seconds);
    }
  }
  throw BackendError("completion failed after " +
                     std::to_string(config_.max_retries) + " retries (" +
                     last_error + ")");
}

}  // namespace storsim
