#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "memplan/gateway/backend.hpp"

namespace memplan::gateway {

struct RetryPolicy {
  int retries = 3;
  double backoff_seconds = 0.5;  // doubles after every failed attempt
};

// Model-agnostic entry point. Routes each request to the backend bound to its
// agent tag (or the default), retries transport failures, and keeps
// per-agent call counters. Safe for concurrent use.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  explicit Gateway(std::shared_ptr<ChatBackend> default_backend, RetryPolicy retry = {});

  void bind(const std::string& agent, std::shared_ptr<ChatBackend> backend, std::string model = {});
  void set_model(const std::string& agent, std::string model);
  std::string model_for(const std::string& agent) const;

  ChatResponse complete(ChatRequest request);

  std::size_t calls(const std::string& agent) const;
  std::size_t total_calls() const;
  std::size_t attempts() const { return attempts_.load(); }

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  const RetryPolicy& retry_policy() const { return retry_; }

 private:
  struct Binding {
    std::shared_ptr<ChatBackend> backend;
    std::string model;
  };

  Binding binding_for(const std::string& agent) const;

  mutable std::mutex mu_;
  Binding default_;
  std::map<std::string, Binding> bindings_;
  std::map<std::string, std::size_t> calls_;
  std::atomic<std::size_t> attempts_{0};
  RetryPolicy retry_;
  Sleeper sleeper_;
};

}  // namespace memplan::gateway
