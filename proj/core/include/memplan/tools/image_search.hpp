#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memplan/gateway/chat.hpp"
#include "memplan/tools/observation.hpp"

namespace memplan::tools {

// Offline image-to-image results keyed by image content hash.
class ImageCache {
 public:
  static ImageCache from_jsonl(const std::filesystem::path& path);

  void put(std::string content_hash, std::vector<SearchResult> results);
  const std::vector<SearchResult>* find(const std::string& content_hash) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<SearchResult>> entries_;
};

// Live reverse-image search. Implementations throw on any failure.
class ImageSearchTransport {
 public:
  virtual ~ImageSearchTransport() = default;
  virtual std::vector<SearchResult> search(const gateway::ImageRef& image, std::size_t k) = 0;
};

// Reverse-image search over an HTTP API that takes a public image URL
// (Serper-style `{"url": ...}` body, `X-API-KEY` header).
class HttpImageSearch : public ImageSearchTransport {
 public:
  HttpImageSearch(std::string endpoint, std::string api_key, double timeout_seconds = 30.0);
  std::vector<SearchResult> search(const gateway::ImageRef& image, std::size_t k) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  double timeout_seconds_;
};

// Offline when `live` is null: cached results in stored order, or an empty
// observation with the miss marker. Live failures become tool-error
// observations.
Observation image_search(const gateway::ImageRef& image, const ImageCache& cache, std::size_t k,
                         ImageSearchTransport* live = nullptr);

}  // namespace memplan::tools
