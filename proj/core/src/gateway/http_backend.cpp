#include "memplan/gateway/http_backend.hpp"

#include "common/http_post.hpp"
#include "memplan/common/hash.hpp"

namespace memplan::gateway {

using nlohmann::json;

namespace {

std::string mime_for(const std::string& source) {
  auto dot = source.rfind('.');
  auto ext = dot == std::string::npos ? std::string() : source.substr(dot + 1);
  if (ext == "png") return "image/png";
  if (ext == "gif") return "image/gif";
  if (ext == "webp") return "image/webp";
  return "image/jpeg";
}

}  // namespace

json build_wire_request(const ChatRequest& request, bool logprobs) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json msg{{"role", std::string(to_string(m.role))}};
    if (m.image) {
      std::string url = m.image->is_remote()
                            ? m.image->source
                            : "data:" + mime_for(m.image->source) + ";base64," + base64_encode(*m.image->bytes);
      msg["content"] = json::array({json{{"type", "text"}, {"text", m.content}},
                                    json{{"type", "image_url"}, {"image_url", {{"url", url}}}}});
    } else {
      msg["content"] = m.content;
    }
    messages.push_back(std::move(msg));
  }
  json body{{"model", request.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  if (logprobs) body["logprobs"] = true;
  return body;
}

ChatResponse parse_wire_response(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw MalformedResponse("completion payload is not a JSON object");
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw MalformedResponse("completion payload has no choices");
  }
  const auto& choice = j["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content")) {
    throw MalformedResponse("completion choice has no message content");
  }
  ChatResponse out;
  const auto& content = choice["message"]["content"];
  if (content.is_string()) {
    out.text = content.get<std::string>();
  } else if (!content.is_null()) {
    throw MalformedResponse("message content is not a string");
  }
  auto finish = choice.value("finish_reason", std::string("stop"));
  out.finish = finish == "length" ? FinishReason::Length : finish == "stop" ? FinishReason::Stop : FinishReason::Error;
  if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
      choice["logprobs"]["content"].is_array()) {
    for (const auto& t : choice["logprobs"]["content"]) {
      if (!t.contains("token") || !t.contains("logprob")) throw MalformedResponse("logprob record incomplete");
      out.tokens.push_back({t["token"].get<std::string>(), t["logprob"].get<double>()});
    }
  }
  return out;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {}

ChatResponse HttpChatBackend::send(const ChatRequest& request) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  auto reply = detail::http_post_json(config_.base_url, config_.path,
                                      build_wire_request(request, config_.logprobs).dump(), headers,
                                      config_.timeout_seconds);
  if (detail::is_transient_status(reply.status)) {
    throw TransportError("HTTP " + std::to_string(reply.status) + " from " + config_.base_url);
  }
  if (reply.status != 200) {
    throw GatewayError("HTTP " + std::to_string(reply.status) + " from " + config_.base_url + ": " +
                       reply.body.substr(0, 200));
  }
  return parse_wire_response(reply.body);
}

}  // namespace memplan::gateway
