#pragma once

#include <string>

#include "memplan/gateway/chat.hpp"

namespace memplan::gateway {

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Throws TransportError for transient failures. Any other exception is
  // treated as final by the gateway.
  virtual ChatResponse send(const ChatRequest& request) = 0;

  virtual bool supports_logprobs() const { return false; }
  virtual std::string name() const = 0;
};

}  // namespace memplan::gateway
