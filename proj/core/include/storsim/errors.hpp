#pragma once

#include <stdexcept>
#include <string>

namespace storsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid scenario/rules/checkpoint input. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// LLM backend failure (exhausted retries, missing rule, missing credential).
/// CLI exit code 3.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Platform or filesystem failure (oversize toot, unknown target, blocked
/// interaction, unwritable output directory). CLI exit code 4.
class PlatformError : public Error {
 public:
  using Error::Error;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kBackend = 3;
inline constexpr int kPlatform = 4;
inline constexpr int kInternal = 5;
}  // namespace exit_code

}  // namespace storsim
