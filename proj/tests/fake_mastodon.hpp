#pragma once

// In-process Mastodon v1 API fake backed by the emulator, so the REST client
// runs the same black-box contract suite as the emulator itself.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <map>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/mastodon_rest.hpp"
#include "storsim/platform.hpp"

namespace storsim::testing {

class FakeMastodonServer {
 public:
  explicit FakeMastodonServer(std::vector<MastodonCredential> credentials)
      : emulator_({parse_sim_time("2024-10-01 08:00"), 30}) {
    emulator_.set_episode(0);
    int next_id = 1;
    for (const auto& credential : credentials) {
      token_to_handle_[credential.token] = credential.acct;
      handle_to_id_[credential.acct] = std::to_string(next_id++);
      emulator_.ensure_account(credential.acct, "", "");
    }
    install_routes();
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeMastodonServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  Emulator& emulator() { return emulator_; }

 private:
  using Json = nlohmann::json;

  std::string actor_of(const httplib::Request& req) {
    auto header = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (header.rfind(prefix, 0) != 0) return "";
    auto it = token_to_handle_.find(header.substr(prefix.size()));
    return it == token_to_handle_.end() ? "" : it->second;
  }

  std::string handle_by_id(const std::string& id) {
    for (const auto& [handle, server_id] : handle_to_id_)
      if (server_id == id) return handle;
    return "";
  }

  static std::string html_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
      switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
      }
    }
    return out;
  }

  static std::string iso_time(SimTime t) {
    std::string s = format_sim_time(t);  // "YYYY-MM-DD HH:MM"
    s[10] = 'T';
    return s + ":00.000Z";
  }

  Json account_json(const std::string& handle) {
    return Json{{"id", handle_to_id_.at(handle)},
                {"username", handle},
                {"acct", handle},
                {"display_name", emulator_.display_name(handle)}};
  }

  Json status_json(const Toot& toot) {
    Json j;
    j["id"] = std::to_string(toot.id);
    j["created_at"] = iso_time(toot.created_at);
    if (toot.in_reply_to)
      j["in_reply_to_id"] = std::to_string(*toot.in_reply_to);
    else
      j["in_reply_to_id"] = nullptr;
    j["account"] = account_json(toot.author);
    if (toot.boost_of) {
      j["content"] = "";
      j["reblog"] = status_json(*emulator_.get_toot(*toot.boost_of));
    } else {
      j["content"] = "<p>" + html_escape(toot.text) + "</p>";
      j["reblog"] = nullptr;
    }
    Json mentions = Json::array();
    for (const auto& mention : toot.mentions)
      mentions.push_back(Json{{"acct", mention}});
    j["mentions"] = mentions;
    return j;
  }

  static void fail(httplib::Response& res, const PlatformError& error) {
    std::string what = error.what();
    int status = 422;
    if (what.find("unknown") != std::string::npos) status = 404;
    if (what.find("blocked") != std::string::npos) status = 403;
    res.status = status;
    res.set_content(Json{{"error", what}}.dump(), "application/json");
  }

  template <typename Fn>
  void authed(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    std::string actor = actor_of(req);
    if (actor.empty()) {
      res.status = 401;
      res.set_content(R"({"error":"The access token is invalid"})",
                      "application/json");
      return;
    }
    try {
      fn(actor);
    } catch (const PlatformError& error) {
      fail(res, error);
    }
  }

  void install_routes() {
    server_.Get("/api/v1/accounts/verify_credentials",
                [this](const httplib::Request& req, httplib::Response& res) {
                  authed(req, res, [&](const std::string& actor) {
                    res.set_content(account_json(actor).dump(),
                                    "application/json");
                  });
                });

    server_.Patch("/api/v1/accounts/update_credentials",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    authed(req, res, [&](const std::string& actor) {
                      Json body = Json::parse(req.body);
                      std::string display =
                          body.value("display_name", emulator_.display_name(actor));
                      std::string note = body.value("note", emulator_.bio(actor));
                      emulator_.ensure_account(actor, display, note);
                      res.set_content(account_json(actor).dump(),
                                      "application/json");
                    });
                  });

    server_.Post("/api/v1/statuses",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   authed(req, res, [&](const std::string& actor) {
                     Json body = Json::parse(req.body);
                     std::string status = body.at("status").get<std::string>();
                     Toot toot;
                     if (body.contains("in_reply_to_id") &&
                         !body.at("in_reply_to_id").is_null()) {
                       TootId parent = std::stoll(
                           body.at("in_reply_to_id").get<std::string>());
                       toot = emulator_.reply(actor, parent, status);
                     } else {
                       toot = emulator_.post_toot(actor, status);
                     }
                     res.set_content(status_json(toot).dump(),
                                     "application/json");
                   });
                 });

    server_.Get("/api/v1/timelines/home",
                [this](const httplib::Request& req, httplib::Response& res) {
                  authed(req, res, [&](const std::string& actor) {
                    int limit = 20;
                    if (req.has_param("limit"))
                      limit = std::stoi(req.get_param_value("limit"));
                    Json out = Json::array();
                    for (const auto& toot :
                         emulator_.home_timeline(actor, limit))
                      out.push_back(status_json(toot));
                    res.set_content(out.dump(), "application/json");
                  });
                });

    server_.Get(R"(/api/v1/statuses/(\d+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  authed(req, res, [&](const std::string&) {
                    auto toot = emulator_.get_toot(std::stoll(req.matches[1]));
                    if (!toot) {
                      res.status = 404;
                      res.set_content(R"({"error":"Record not found"})",
                                      "application/json");
                      return;
                    }
                    res.set_content(status_json(*toot).dump(),
                                    "application/json");
                  });
                });

    server_.Post(R"(/api/v1/statuses/(\d+)/reblog)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   authed(req, res, [&](const std::string& actor) {
                     Toot boost =
                         emulator_.boost(actor, std::stoll(req.matches[1]));
                     res.set_content(status_json(boost).dump(),
                                     "application/json");
                   });
                 });

    server_.Post(R"(/api/v1/statuses/(\d+)/favourite)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   authed(req, res, [&](const std::string& actor) {
                     TootId id = std::stoll(req.matches[1]);
                     emulator_.favorite(actor, id);
                     res.set_content(status_json(*emulator_.get_toot(id)).dump(),
                                     "application/json");
                   });
                 });

    static const char* kRelationshipActions[] = {"follow", "unfollow", "block",
                                                 "unblock"};
    for (const char* action : kRelationshipActions) {
      std::string pattern =
          std::string(R"(/api/v1/accounts/(\d+)/)") + action;
      std::string verb = action;
      server_.Post(pattern, [this, verb](const httplib::Request& req,
                                         httplib::Response& res) {
        authed(req, res, [&](const std::string& actor) {
          std::string target = handle_by_id(req.matches[1]);
          if (target.empty())
            throw PlatformError("unknown account id " +
                                std::string(req.matches[1]));
          if (verb == "follow") emulator_.follow(actor, target);
          if (verb == "unfollow") emulator_.unfollow(actor, target);
          if (verb == "block") emulator_.block(actor, target);
          if (verb == "unblock") emulator_.unblock(actor, target);
          res.set_content(Json{{"id", req.matches[1].str()}}.dump(),
                          "application/json");
        });
      });
    }
  }

  Emulator emulator_;
  std::map<std::string, std::string> token_to_handle_;
  std::map<std::string, std::string> handle_to_id_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace storsim::testing
