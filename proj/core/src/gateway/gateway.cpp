#include "memplan/gateway/gateway.hpp"

#include <thread>

namespace memplan::gateway {

Gateway::Gateway(std::shared_ptr<ChatBackend> default_backend, RetryPolicy retry)
    : default_{std::move(default_backend), {}},
      retry_(retry),
      sleeper_([](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }) {
  if (!default_.backend) throw PreconditionError("gateway needs a default backend");
  if (retry_.retries < 0) throw PreconditionError("retries must be >= 0");
}

void Gateway::bind(const std::string& agent, std::shared_ptr<ChatBackend> backend, std::string model) {
  std::lock_guard lock(mu_);
  bindings_[agent] = Binding{backend ? std::move(backend) : default_.backend, std::move(model)};
}

void Gateway::set_model(const std::string& agent, std::string model) {
  std::lock_guard lock(mu_);
  auto it = bindings_.find(agent);
  if (it == bindings_.end()) {
    bindings_[agent] = Binding{default_.backend, std::move(model)};
  } else {
    it->second.model = std::move(model);
  }
}

std::string Gateway::model_for(const std::string& agent) const { return binding_for(agent).model; }

Gateway::Binding Gateway::binding_for(const std::string& agent) const {
  std::lock_guard lock(mu_);
  auto it = bindings_.find(agent);
  return it == bindings_.end() ? default_ : it->second;
}

ChatResponse Gateway::complete(ChatRequest request) {
  request.validate();
  auto binding = binding_for(request.agent);
  if (request.model.empty()) request.model = binding.model;
  {
    std::lock_guard lock(mu_);
    ++calls_[request.agent];
  }
  std::string last_error;
  for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
    ++attempts_;
    try {
      auto response = binding.backend->send(request);
      if (!response.tokens.empty()) {
        std::string joined;
        for (const auto& t : response.tokens) joined += t.token;
        if (joined != response.text) {
          throw MalformedResponse("token records do not concatenate to the completion text");
        }
      }
      return response;
    } catch (const TransportError& e) {
      last_error = e.what();
      if (attempt < retry_.retries) {
        sleeper_(std::chrono::duration<double>(retry_.backoff_seconds * static_cast<double>(1 << attempt)));
      }
    }
  }
  throw TransportExhausted("agent '" + request.agent + "': " + std::to_string(retry_.retries + 1) +
                           " attempts failed; last error: " + last_error);
}

std::size_t Gateway::calls(const std::string& agent) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(agent);
  return it == calls_.end() ? 0 : it->second;
}

std::size_t Gateway::total_calls() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, c] : calls_) n += c;
  return n;
}

}  // namespace memplan::gateway
