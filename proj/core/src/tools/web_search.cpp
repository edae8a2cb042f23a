#include "memplan/tools/web_search.hpp"

#include <nlohmann/json.hpp>

#include "common/http_post.hpp"
#include "memplan/gateway/chat.hpp"

namespace memplan::tools {

HttpWebSearch::HttpWebSearch(std::string endpoint, std::string api_key, double timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {}

std::vector<SearchResult> HttpWebSearch::search(const std::string& query, std::size_t k) {
  auto [base, path] = detail::split_url(endpoint_);
  nlohmann::json body{{"q", query}, {"num", k}};
  auto reply = detail::http_post_json(base, path, body.dump(), {{"X-API-KEY", api_key_}}, timeout_seconds_);
  if (reply.status != 200) throw gateway::TransportError("web search HTTP " + std::to_string(reply.status));
  auto j = nlohmann::json::parse(reply.body, nullptr, false);
  if (j.is_discarded() || !j.contains("organic")) throw gateway::MalformedResponse("web search payload has no organic results");
  std::vector<SearchResult> out;
  for (const auto& r : j["organic"]) {
    if (out.size() >= k) break;
    SearchResult s;
    s.title = r.value("title", std::string());
    s.snippet = r.value("snippet", std::string());
    s.url = r.value("link", std::string());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace memplan::tools
