#pragma once

#include <string>
#include <utility>
#include <vector>

namespace memplan::detail {

struct HttpReply {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to base_url + path. Connection-level failures raise
// gateway::TransportError; HTTP statuses are returned to the caller.
HttpReply http_post_json(const std::string& base_url, const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         double timeout_seconds);

// Splits "https://host:port/a/b" into ("https://host:port", "/a/b").
std::pair<std::string, std::string> split_url(const std::string& url);

bool is_transient_status(int status);

}  // namespace memplan::detail
