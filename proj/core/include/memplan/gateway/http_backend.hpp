#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "memplan/gateway/backend.hpp"

namespace memplan::gateway {

struct HttpBackendConfig {
  std::string base_url;                        // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string api_key;
  bool logprobs = false;
  double timeout_seconds = 120.0;
};

// Client for the common chat-completion wire format.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  ChatResponse send(const ChatRequest& request) override;
  bool supports_logprobs() const override { return config_.logprobs; }
  std::string name() const override { return "http:" + config_.base_url; }

 private:
  HttpBackendConfig config_;
};

nlohmann::json build_wire_request(const ChatRequest& request, bool logprobs);

// Throws MalformedResponse when the payload is not a usable completion.
ChatResponse parse_wire_response(const std::string& body);

}  // namespace memplan::gateway
