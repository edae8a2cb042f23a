#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memplan/tools/observation.hpp"

namespace memplan::tools {

class TextSearchTransport {
 public:
  virtual ~TextSearchTransport() = default;
  virtual std::vector<SearchResult> search(const std::string& query, std::size_t k) = 0;
};

// Web search API client (Serper-style: POST {"q", "num"}, results under "organic").
class HttpWebSearch : public TextSearchTransport {
 public:
  HttpWebSearch(std::string endpoint, std::string api_key, double timeout_seconds = 30.0);
  std::vector<SearchResult> search(const std::string& query, std::size_t k) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  double timeout_seconds_;
};

}  // namespace memplan::tools
