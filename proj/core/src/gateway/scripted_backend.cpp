#include "memplan/gateway/scripted_backend.hpp"

#include <algorithm>

#include "memplan/common/hash.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/common/text.hpp"

namespace memplan::gateway {

namespace {

ScriptedReply reply_from_json(const json& j) {
  if (j.is_string()) return ScriptedReply::text(j.get<std::string>());
  if (!j.is_object()) throw FormatError("script reply must be a string or an object");
  if (j.value("transport_error", false)) return ScriptedReply::transport_failure();
  ScriptedReply r;
  if (j.value("malformed", false)) {
    r.kind = ScriptedReply::Kind::Malformed;
    return r;
  }
  r.response.text = j.at("text").get<std::string>();
  if (j.contains("tokens")) {
    for (const auto& t : j.at("tokens")) {
      r.response.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
    }
  }
  auto finish = j.value("finish", std::string("stop"));
  r.response.finish = finish == "length" ? FinishReason::Length
                      : finish == "error" ? FinishReason::Error
                                          : FinishReason::Stop;
  return r;
}

std::vector<std::string> string_list(const json& rec, const char* key) {
  std::vector<std::string> out;
  if (!rec.contains(key)) return out;
  const auto& v = rec.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else {
    for (const auto& s : v) out.push_back(s.get<std::string>());
  }
  return out;
}

bool contains_all(const std::string& hay, const std::vector<std::string>& needles) {
  return std::all_of(needles.begin(), needles.end(),
                     [&](const auto& n) { return hay.find(n) != std::string::npos; });
}

}  // namespace

ScriptedReply ScriptedReply::text(std::string t) {
  ScriptedReply r;
  r.response.text = std::move(t);
  return r;
}

ScriptedReply ScriptedReply::transport_failure() {
  ScriptedReply r;
  r.kind = Kind::TransportFailure;
  return r;
}

ScriptRule ScriptRule::from_json(const json& rec) {
  if (!rec.is_object()) throw FormatError("script record must be an object");
  static const std::vector<std::string> kKnown = {"fingerprint",   "agent",    "contains", "not_contains",
                                                  "last_contains", "response", "responses"};
  for (const auto& [k, _] : rec.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end()) {
      throw FormatError("unknown script key: " + k);
    }
  }
  ScriptRule rule;
  if (rec.contains("fingerprint")) rule.fingerprint = rec.at("fingerprint").get<std::string>();
  if (rec.contains("agent")) rule.agent = rec.at("agent").get<std::string>();
  rule.contains = string_list(rec, "contains");
  rule.not_contains = string_list(rec, "not_contains");
  rule.last_contains = string_list(rec, "last_contains");
  if (rec.contains("response")) rule.replies.push_back(reply_from_json(rec.at("response")));
  if (rec.contains("responses")) {
    for (const auto& r : rec.at("responses")) rule.replies.push_back(reply_from_json(r));
  }
  if (rule.replies.empty()) throw FormatError("script record has no response");
  return rule;
}

bool ScriptRule::matches(const ChatRequest& request, const std::string& fp) const {
  if (fingerprint && *fingerprint != fp) return false;
  if (agent && *agent != request.agent) return false;
  if (!contains.empty() || !not_contains.empty()) {
    std::string all;
    for (const auto& m : request.messages) {
      all += m.content;
      all += '\n';
    }
    if (!contains_all(all, contains)) return false;
    for (const auto& n : not_contains) {
      if (all.find(n) != std::string::npos) return false;
    }
  }
  if (!last_contains.empty() && !contains_all(request.messages.back().content, last_contains)) {
    return false;
  }
  return true;
}

std::vector<TokenLogprob> synthesize_tokens(const std::string& text) {
  std::vector<TokenLogprob> out;
  std::uint64_t pos = 0;
  for (auto& piece : text::proxy_tokens(text)) {
    auto h = fnv1a64(piece, fnv1a64(std::to_string(pos++)));
    double lp = -0.001 - static_cast<double>(h % 2000) / 1000.0;
    out.push_back({std::move(piece), lp});
  }
  return out;
}

ScriptedBackend::ScriptedBackend(bool strict) : strict_(strict) {}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, bool strict)
    : rules_(std::move(rules)), cursor_(rules_.size(), 0), strict_(strict) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_jsonl(const std::filesystem::path& path, bool strict) {
  std::vector<ScriptRule> rules;
  for (const auto& rec : read_jsonl(path)) rules.push_back(ScriptRule::from_json(rec));
  return std::make_shared<ScriptedBackend>(std::move(rules), strict);
}

void ScriptedBackend::add(ScriptRule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
  cursor_.push_back(0);
}

void ScriptedBackend::add(std::string agent, std::vector<std::string> contains, std::vector<std::string> replies) {
  ScriptRule rule;
  rule.agent = std::move(agent);
  rule.contains = std::move(contains);
  for (auto& r : replies) rule.replies.push_back(ScriptedReply::text(std::move(r)));
  add(std::move(rule));
}

ChatResponse ScriptedBackend::send(const ChatRequest& request) {
  auto fp = fingerprint(request);
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (!rules_[i].matches(request, fp)) continue;
    log_.push_back({request.agent, fp, i});
    const auto& replies = rules_[i].replies;
    const auto& reply = replies[std::min(cursor_[i], replies.size() - 1)];
    ++cursor_[i];
    switch (reply.kind) {
      case ScriptedReply::Kind::TransportFailure:
        throw TransportError("scripted transport failure (rule " + std::to_string(i) + ")");
      case ScriptedReply::Kind::Malformed:
        throw MalformedResponse("scripted malformed payload (rule " + std::to_string(i) + ")");
      case ScriptedReply::Kind::Response:
        break;
    }
    auto out = reply.response;
    if (out.tokens.empty() && synthesize_logprobs_) out.tokens = synthesize_tokens(out.text);
    return out;
  }
  log_.push_back({request.agent, fp, std::nullopt});
  if (strict_) {
    throw ScriptMiss("no scripted response for agent '" + request.agent + "' fingerprint " + fp);
  }
  ChatResponse echo;
  echo.text = request.messages.back().content;
  if (synthesize_logprobs_) echo.tokens = synthesize_tokens(echo.text);
  return echo;
}

std::vector<ScriptMatch> ScriptedBackend::match_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace memplan::gateway
