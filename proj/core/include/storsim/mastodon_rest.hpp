#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "storsim/platform.hpp"

namespace storsim {

/// Credential for one pre-created account on a real server.
struct MastodonCredential {
  std::string acct;   // server-side username
  std::string token;  // per-account bearer token
};

/// Loads credentials from a JSON file: [{"acct": "...", "token": "..."}].
std::vector<MastodonCredential> load_mastodon_credentials(
    const std::string& path);

/// Mastodon v1 REST implementation of the platform contract. ensure_account
/// claims the next unbound credential (or the one whose acct matches the
/// handle) and updates its profile; there is no account creation, so running
/// out of credentials is an error. Safe for concurrent use across distinct
/// actor accounts.
class MastodonRestClient : public PlatformClient {
 public:
  MastodonRestClient(std::string base_url,
                     std::vector<MastodonCredential> credentials);
  ~MastodonRestClient() override;

  AccountId ensure_account(const std::string& handle,
                           const std::string& display_name,
                           const std::string& bio) override;
  Toot post_toot(const AccountId& actor, const std::string& text) override;
  Toot reply(const AccountId& actor, TootId parent,
             const std::string& text) override;
  Toot boost(const AccountId& actor, TootId toot) override;
  void favorite(const AccountId& actor, TootId toot) override;
  void follow(const AccountId& actor, const AccountId& target) override;
  void unfollow(const AccountId& actor, const AccountId& target) override;
  void block(const AccountId& actor, const AccountId& target) override;
  void unblock(const AccountId& actor, const AccountId& target) override;
  void update_profile(const AccountId& actor, const std::string& bio) override;
  std::vector<Toot> home_timeline(const AccountId& actor, int limit) override;
  bool has_account(const AccountId& account) override;
  std::optional<Toot> get_toot(TootId id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Strips HTML tags and decodes the handful of entities Mastodon emits in
/// status content.
std::string strip_status_html(const std::string& html);

}  // namespace storsim
