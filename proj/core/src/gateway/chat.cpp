#include "memplan/gateway/chat.hpp"

#include "memplan/common/hash.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/common/text.hpp"

namespace memplan::gateway {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  if (s == "tool") return Role::Tool;
  throw FormatError("unknown message role: " + std::string(s));
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "stop";
}

ImageRef ImageRef::from_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw UnresolvableImage("image not found: " + path.string());
  }
  auto bytes = read_file(path);
  ImageRef ref;
  ref.source = path.string();
  ref.content_hash = sha256_hex(bytes);
  ref.bytes = std::make_shared<const std::string>(std::move(bytes));
  return ref;
}

ImageRef ImageRef::from_bytes(std::string bytes, std::string label) {
  ImageRef ref;
  ref.source = std::move(label);
  ref.content_hash = sha256_hex(bytes);
  ref.bytes = std::make_shared<const std::string>(std::move(bytes));
  return ref;
}

ImageRef ImageRef::from_url(std::string url) {
  if (url.empty()) throw UnresolvableImage("empty image url");
  ImageRef ref;
  ref.content_hash = sha256_hex(url);
  ref.source = std::move(url);
  return ref;
}

void ChatRequest::validate() const {
  if (messages.empty()) throw PreconditionError("chat request has no messages");
  auto first = messages.front().role;
  if (first != Role::System && first != Role::User) {
    throw PreconditionError("first message must be system or user");
  }
  if (temperature < 0.0) throw PreconditionError("temperature must be >= 0");
  if (max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

std::string fingerprint(const ChatRequest& request) {
  std::string canon;
  for (const auto& m : request.messages) {
    canon += to_string(m.role);
    canon += '\x1f';
    canon += text::collapse_whitespace(m.content);
    if (m.image) {
      canon += "\x1fimage:";
      canon += m.image->content_hash;
    }
    canon += '\x1e';
  }
  return sha256_hex(canon).substr(0, 32);
}

}  // namespace memplan::gateway
