#include "memplan/memory/embedding.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "common/http_post.hpp"
#include "memplan/common/error.hpp"
#include "memplan/common/hash.hpp"
#include "memplan/common/text.hpp"
#include "memplan/gateway/chat.hpp"

namespace memplan::memory {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("dimension mismatch in dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector normalized(Vector v) {
  double n = l2_norm(v);
  if (n == 0.0) throw PreconditionError("cannot normalize a zero vector");
  for (auto& x : v) x /= n;
  return v;
}

bool is_unit(std::span<const double> v, double tol) { return std::abs(l2_norm(v) - 1.0) <= tol; }

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dim_(dimension) {
  if (dim_ == 0) throw PreconditionError("embedding dimension must be positive");
}

Vector HashingEmbedder::encode(std::string_view input) const {
  Vector v(dim_, 0.0);
  auto norm = text::to_lower(text::collapse_whitespace(input));
  auto add = [&](std::string_view feature, double weight) {
    auto h = fnv1a64(feature);
    double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[(h >> 1) % dim_] += sign * weight;
  };
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    if (end > start) add("w:" + norm.substr(start, end - start), 1.0);
    start = end + 1;
  }
  auto padded = " " + norm + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) add(std::string_view(padded).substr(i, 3), 0.5);
  if (l2_norm(v) == 0.0) {
    v[0] = 1.0;
    return v;
  }
  return normalized(std::move(v));
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
  if (config_.dimension == 0) throw PreconditionError("http embedder needs a declared dimension");
}

Vector HttpEmbedder::encode(std::string_view input) const {
  {
    std::lock_guard lock(mu_);
    auto it = memo_.find(input);
    if (it != memo_.end()) return it->second;
  }
  nlohmann::json body{{"model", config_.model}, {"input", std::string(input)}};
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  auto reply = detail::http_post_json(config_.base_url, config_.path, body.dump(), headers, config_.timeout_seconds);
  if (reply.status != 200) {
    throw gateway::GatewayError("embedding endpoint returned HTTP " + std::to_string(reply.status));
  }
  auto j = nlohmann::json::parse(reply.body, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
      !j["data"][0].contains("embedding")) {
    throw gateway::MalformedResponse("embedding payload has no data[0].embedding");
  }
  auto raw = j["data"][0]["embedding"].get<Vector>();
  if (raw.size() != config_.dimension) {
    throw gateway::MalformedResponse("embedding dimension " + std::to_string(raw.size()) + " != configured " +
                                     std::to_string(config_.dimension));
  }
  auto v = normalized(std::move(raw));
  std::lock_guard lock(mu_);
  memo_.emplace(std::string(input), v);
  return v;
}

}  // namespace memplan::memory
