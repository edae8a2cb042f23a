#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/gateway/backend.hpp"

namespace memplan::gateway {

// One canned reply, or an injected failure.
struct ScriptedReply {
  enum class Kind { Response, TransportFailure, Malformed };
  Kind kind = Kind::Response;
  ChatResponse response;

  static ScriptedReply text(std::string t);
  static ScriptedReply transport_failure();
};

// A rule matches a request when every populated predicate holds. Rules are
// tried in insertion order; the first match answers. Its replies are
// consumed in order and the last one repeats.
struct ScriptRule {
  std::optional<std::string> fingerprint;
  std::optional<std::string> agent;
  std::vector<std::string> contains;
  std::vector<std::string> not_contains;
  std::vector<std::string> last_contains;
  std::vector<ScriptedReply> replies;

  static ScriptRule from_json(const nlohmann::json& record);
  bool matches(const ChatRequest& request, const std::string& fp) const;
};

struct ScriptMatch {
  std::string agent;
  std::string fingerprint;
  std::optional<std::size_t> rule;
};

// Deterministic backend for tests and desk-scale runs. Loaded from a
// line-delimited file, one rule per line.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(bool strict = true);
  ScriptedBackend(std::vector<ScriptRule> rules, bool strict);

  static std::shared_ptr<ScriptedBackend> from_jsonl(const std::filesystem::path& path, bool strict);

  void add(ScriptRule rule);
  // Shorthand: agent-scoped rule answering with `replies` in order.
  void add(std::string agent, std::vector<std::string> contains, std::vector<std::string> replies);

  ChatResponse send(const ChatRequest& request) override;
  bool supports_logprobs() const override { return synthesize_logprobs_; }
  std::string name() const override { return "scripted"; }

  // When set (the default), replies without token records get whitespace
  // proxy tokens with deterministic pseudo log-probabilities.
  void set_synthesize_logprobs(bool on) { synthesize_logprobs_ = on; }

  std::vector<ScriptMatch> match_log() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptRule> rules_;
  std::vector<std::size_t> cursor_;
  std::vector<ScriptMatch> log_;
  bool strict_;
  bool synthesize_logprobs_ = true;
};

// Proxy tokens for `text` with pseudo log-probabilities in [-2.0, -0.001].
std::vector<TokenLogprob> synthesize_tokens(const std::string& text);

}  // namespace memplan::gateway
