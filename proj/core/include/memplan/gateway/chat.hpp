#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memplan/common/error.hpp"

namespace memplan::gateway {

class GatewayError : public Error {
 public:
  using Error::Error;
};

// Raised by backends for failures worth retrying (connection reset, 5xx, 429).
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// Every attempt of one complete() call failed with a TransportError.
class TransportExhausted : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// A strict scripted backend had no entry for the request.
class ScriptMiss : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class MalformedResponse : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class UnresolvableImage : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

enum class Role { System, User, Assistant, Tool };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

// An image attached to a message. Local images carry their bytes; remote
// images are identified by URL only.
struct ImageRef {
  std::string source;
  std::string content_hash;
  std::shared_ptr<const std::string> bytes;

  static ImageRef from_file(const std::filesystem::path& path);
  static ImageRef from_bytes(std::string bytes, std::string label);
  static ImageRef from_url(std::string url);

  bool is_remote() const { return bytes == nullptr; }
};

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  std::optional<ImageRef> image;
};

struct ChatRequest {
  // Logical caller ("planner", "executor", "judge", ...). Used for routing
  // and call accounting; not part of the fingerprint.
  std::string agent;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model;

  // Throws PreconditionError when the invariants do not hold.
  void validate() const;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason r);

struct ChatResponse {
  std::string text;
  std::vector<TokenLogprob> tokens;
  FinishReason finish = FinishReason::Stop;
};

// Stable hash over role and whitespace-normalized content of every message
// (plus attached image hashes).
std::string fingerprint(const ChatRequest& request);

}  // namespace memplan::gateway
