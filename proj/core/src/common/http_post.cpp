#include "common/http_post.hpp"

#include <chrono>

#include <httplib.h>

#include "memplan/gateway/chat.hpp"

namespace memplan::detail {

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

HttpReply http_post_json(const std::string& base_url, const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         double timeout_seconds) {
  httplib::Client client(base_url);
  auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto res = client.Post(path, hdrs, body, "application/json");
  if (!res) {
    throw gateway::TransportError("POST " + base_url + path + " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace memplan::detail
