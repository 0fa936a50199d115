#include "storsim/mastodon_rest.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/sim_time.hpp"

namespace storsim {

using Json = nlohmann::json;

std::vector<MastodonCredential> load_mastodon_credentials(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open credentials file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buffer.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("credentials parse error: ") + e.what());
  }
  std::vector<MastodonCredential> credentials;
  for (const auto& entry : j) {
    credentials.push_back({entry.at("acct").get<std::string>(),
                           entry.at("token").get<std::string>()});
  }
  return credentials;
}

std::string strip_status_html(const std::string& html) {
  std::string out;
  out.reserve(html.size());
  bool in_tag = false;
  for (std::size_t i = 0; i < html.size(); ++i) {
    char c = html[i];
    if (c == '<') {
      // Paragraph/line breaks become newlines so threaded text stays legible.
      if (html.compare(i, 4, "</p>") == 0 || html.compare(i, 4, "<br>") == 0 ||
          html.compare(i, 5, "<br/>") == 0 ||
          html.compare(i, 6, "<br />") == 0) {
        if (!out.empty() && out.back() != '\n') out.push_back('\n');
      }
      in_tag = true;
    } else if (c == '>') {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  // Minimal entity decoding.
  struct Entity { const char* from; const char* to; };
  static const Entity entities[] = {{"&amp;", "&"}, {"&lt;", "<"},
                                    {"&gt;", ">"},  {"&quot;", "\""},
                                    {"&#39;", "'"}, {"&apos;", "'"}};
  for (const auto& entity : entities) {
    std::size_t pos = 0;
    std::string from(entity.from);
    while ((pos = out.find(from, pos)) != std::string::npos) {
      out.replace(pos, from.size(), entity.to);
      pos += 1;
    }
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

namespace {

SimTime parse_iso8601_minutes(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d", &y, &mo, &d, &h, &mi) != 5)
    return 0;
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", y, mo, d, h, mi);
  return parse_sim_time(buf);
}

}  // namespace

struct MastodonRestClient::Impl {
  std::string base_url;
  std::vector<MastodonCredential> credentials;

  struct Binding {
    std::string token;
    std::string server_id;
    std::string acct;
  };

  std::mutex mutex;
  std::map<AccountId, Binding> bound;       // our handle -> binding
  std::map<std::string, AccountId> by_acct; // server acct -> our handle
  std::set<std::size_t> claimed;            // credential indices in use

  httplib::Client make_client() const {
    httplib::Client client(base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(30);
    return client;
  }

  Json request(const std::string& method, const std::string& path,
               const std::string& token, const Json* body) {
    auto client = make_client();
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    httplib::Result result;
    std::string payload = body ? body->dump() : "";
    if (method == "GET") {
      result = client.Get(path, headers);
    } else if (method == "POST") {
      result = client.Post(path, headers, payload, "application/json");
    } else if (method == "PATCH") {
      result = client.Patch(path, headers, payload, "application/json");
    } else {
      throw PlatformError("unsupported HTTP method " + method);
    }
    if (!result)
      throw PlatformError("mastodon request failed: " +
                          httplib::to_string(result.error()));
    if (result->status < 200 || result->status >= 300) {
      std::string detail = result->body;
      try {
        Json err = Json::parse(result->body);
        if (err.contains("error")) detail = err.at("error").get<std::string>();
      } catch (...) {
      }
      throw PlatformError("mastodon API " + method + " " + path + ": HTTP " +
                          std::to_string(result->status) + " (" + detail + ")");
    }
    if (result->body.empty()) return Json::object();
    try {
      return Json::parse(result->body);
    } catch (const Json::exception& e) {
      throw PlatformError(std::string("malformed mastodon response: ") +
                          e.what());
    }
  }

  const Binding& binding_for(const AccountId& actor) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = bound.find(actor);
    if (it == bound.end())
      throw PlatformError("account '" + actor + "' is not provisioned");
    return it->second;
  }

  std::string server_id_of(const AccountId& account) {
    return binding_for(account).server_id;
  }

  AccountId handle_of_acct(const std::string& acct) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = by_acct.find(acct);
    return it == by_acct.end() ? acct : it->second;
  }

  Toot toot_from_status(const Json& status) {
    Toot toot;
    toot.id = std::stoll(status.at("id").get<std::string>());
    toot.author = handle_of_acct(status.at("account").at("acct").get<std::string>());
    if (status.contains("created_at") && status.at("created_at").is_string())
      toot.created_at = parse_iso8601_minutes(status.at("created_at").get<std::string>());
    if (status.contains("reblog") && !status.at("reblog").is_null()) {
      toot.boost_of = std::stoll(status.at("reblog").at("id").get<std::string>());
    } else {
      toot.text = strip_status_html(status.value("content", std::string()));
    }
    if (status.contains("in_reply_to_id") && !status.at("in_reply_to_id").is_null())
      toot.in_reply_to = std::stoll(status.at("in_reply_to_id").get<std::string>());
    if (status.contains("mentions")) {
      for (const auto& mention : status.at("mentions"))
        toot.mentions.push_back(handle_of_acct(mention.at("acct").get<std::string>()));
    }
    return toot;
  }
};

MastodonRestClient::MastodonRestClient(std::string base_url,
                                       std::vector<MastodonCredential> credentials)
    : impl_(std::make_unique<Impl>()) {
  impl_->base_url = std::move(base_url);
  impl_->credentials = std::move(credentials);
}

MastodonRestClient::~MastodonRestClient() = default;

AccountId MastodonRestClient::ensure_account(const std::string& handle,
                                             const std::string& display_name,
                                             const std::string& bio) {
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    if (impl_->bound.count(handle)) return handle;  // idempotent
  }

  // Prefer the credential whose server acct matches the handle, otherwise
  // claim the next unbound blank account.
  std::size_t pick = impl_->credentials.size();
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    for (std::size_t i = 0; i < impl_->credentials.size(); ++i) {
      if (impl_->claimed.count(i)) continue;
      if (impl_->credentials[i].acct == handle) {
        pick = i;
        break;
      }
      if (pick == impl_->credentials.size()) pick = i;
    }
    if (pick == impl_->credentials.size())
      throw PlatformError("insufficient blank accounts: none left for '" +
                          handle + "'");
    impl_->claimed.insert(pick);
  }
  const auto& credential = impl_->credentials[pick];

  Json me = impl_->request("GET", "/api/v1/accounts/verify_credentials",
                           credential.token, nullptr);
  Json update;
  update["display_name"] = display_name;
  update["note"] = bio;
  impl_->request("PATCH", "/api/v1/accounts/update_credentials",
                 credential.token, &update);

  std::lock_guard<std::mutex> lock(impl_->mutex);
  Impl::Binding binding;
  binding.token = credential.token;
  binding.server_id = me.at("id").get<std::string>();
  binding.acct = me.at("acct").get<std::string>();
  impl_->bound[handle] = binding;
  impl_->by_acct[binding.acct] = handle;
  return handle;
}

Toot MastodonRestClient::post_toot(const AccountId& actor,
                                   const std::string& text) {
  if (text.size() > kTootMaxChars)
    throw PlatformError("toot exceeds " + std::to_string(kTootMaxChars) +
                        " characters (got " + std::to_string(text.size()) + ")");
  const auto& binding = impl_->binding_for(actor);
  Json body;
  body["status"] = text;
  Json status = impl_->request("POST", "/api/v1/statuses", binding.token, &body);
  return impl_->toot_from_status(status);
}

Toot MastodonRestClient::reply(const AccountId& actor, TootId parent,
                               const std::string& text) {
  if (text.size() > kTootMaxChars)
    throw PlatformError("toot exceeds " + std::to_string(kTootMaxChars) +
                        " characters (got " + std::to_string(text.size()) + ")");
  const auto& binding = impl_->binding_for(actor);
  Json body;
  body["status"] = text;
  body["in_reply_to_id"] = std::to_string(parent);
  Json status = impl_->request("POST", "/api/v1/statuses", binding.token, &body);
  return impl_->toot_from_status(status);
}

Toot MastodonRestClient::boost(const AccountId& actor, TootId toot) {
  const auto& binding = impl_->binding_for(actor);
  Json status = impl_->request(
      "POST", "/api/v1/statuses/" + std::to_string(toot) + "/reblog",
      binding.token, nullptr);
  return impl_->toot_from_status(status);
}

void MastodonRestClient::favorite(const AccountId& actor, TootId toot) {
  const auto& binding = impl_->binding_for(actor);
  impl_->request("POST",
                 "/api/v1/statuses/" + std::to_string(toot) + "/favourite",
                 binding.token, nullptr);
}

void MastodonRestClient::follow(const AccountId& actor, const AccountId& target) {
  const auto& binding = impl_->binding_for(actor);
  impl_->request("POST",
                 "/api/v1/accounts/" + impl_->server_id_of(target) + "/follow",
                 binding.token, nullptr);
}

void MastodonRestClient::unfollow(const AccountId& actor,
                                  const AccountId& target) {
  const auto& binding = impl_->binding_for(actor);
  impl_->request(
      "POST", "/api/v1/accounts/" + impl_->server_id_of(target) + "/unfollow",
      binding.token, nullptr);
}

void MastodonRestClient::block(const AccountId& actor, const AccountId& target) {
  const auto& binding = impl_->binding_for(actor);
  impl_->request("POST",
                 "/api/v1/accounts/" + impl_->server_id_of(target) + "/block",
                 binding.token, nullptr);
}

void MastodonRestClient::unblock(const AccountId& actor,
                                 const AccountId& target) {
  const auto& binding = impl_->binding_for(actor);
  impl_->request(
      "POST", "/api/v1/accounts/" + impl_->server_id_of(target) + "/unblock",
      binding.token, nullptr);
}

void MastodonRestClient::update_profile(const AccountId& actor,
                                        const std::string& bio) {
  const auto& binding = impl_->binding_for(actor);
  Json body;
  body["note"] = bio;
  impl_->request("PATCH", "/api/v1/accounts/update_credentials", binding.token,
                 &body);
}

std::vector<Toot> MastodonRestClient::home_timeline(const AccountId& actor,
                                                    int limit) {
  const auto& binding = impl_->binding_for(actor);
  Json statuses = impl_->request(
      "GET", "/api/v1/timelines/home?limit=" + std::to_string(limit),
      binding.token, nullptr);
  std::vector<Toot> timeline;
  for (const auto& status : statuses)
    timeline.push_back(impl_->toot_from_status(status));
  return timeline;
}

bool MastodonRestClient::has_account(const AccountId& account) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->bound.count(account) > 0;
}

std::optional<Toot> MastodonRestClient::get_toot(TootId id) {
  std::string token;
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    if (impl_->bound.empty()) return std::nullopt;
    token = impl_->bound.begin()->second.token;
  }
  try {
    Json status = impl_->request(
        "GET", "/api/v1/statuses/" + std::to_string(id), token, nullptr);
    return impl_->toot_from_status(status);
  } catch (const PlatformError&) {
    return std::nullopt;
  }
}

}  // namespace storsim
