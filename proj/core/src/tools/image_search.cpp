#include "memplan/tools/image_search.hpp"

#include <nlohmann/json.hpp>

#include "common/http_post.hpp"
#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"

namespace memplan::tools {

ImageCache ImageCache::from_jsonl(const std::filesystem::path& path) {
  ImageCache cache;
  for (const auto& rec : read_jsonl(path)) {
    if (!rec.contains("hash") || !rec.contains("results")) {
      throw FormatError(path.string() + ": image cache record needs hash and results");
    }
    std::vector<SearchResult> results;
    for (const auto& r : rec.at("results")) results.push_back(SearchResult::from_json(r));
    cache.put(rec.at("hash").get<std::string>(), std::move(results));
  }
  return cache;
}

void ImageCache::put(std::string content_hash, std::vector<SearchResult> results) {
  entries_[std::move(content_hash)] = std::move(results);
}

const std::vector<SearchResult>* ImageCache::find(const std::string& content_hash) const {
  auto it = entries_.find(content_hash);
  return it == entries_.end() ? nullptr : &it->second;
}

HttpImageSearch::HttpImageSearch(std::string endpoint, std::string api_key, double timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {}

std::vector<SearchResult> HttpImageSearch::search(const gateway::ImageRef& image, std::size_t k) {
  if (!image.is_remote()) {
    throw gateway::TransportError("live image search needs a public image URL; local file " + image.source);
  }
  auto [base, path] = detail::split_url(endpoint_);
  nlohmann::json body{{"url", image.source}};
  auto reply = detail::http_post_json(base, path, body.dump(), {{"X-API-KEY", api_key_}}, timeout_seconds_);
  if (reply.status != 200) throw gateway::TransportError("image search HTTP " + std::to_string(reply.status));
  auto j = nlohmann::json::parse(reply.body, nullptr, false);
  if (j.is_discarded()) throw gateway::MalformedResponse("image search payload is not JSON");
  std::vector<SearchResult> out;
  for (const auto& key : {"visual_matches", "organic", "images"}) {
    if (!j.contains(key) || !j[key].is_array()) continue;
    for (const auto& r : j[key]) {
      if (out.size() >= k) break;
      SearchResult s;
      s.title = r.value("title", std::string());
      s.snippet = r.value("snippet", r.value("source", std::string()));
      s.url = r.value("link", std::string());
      s.image_url = r.value("imageUrl", std::string());
      out.push_back(std::move(s));
    }
    break;
  }
  return out;
}

Observation image_search(const gateway::ImageRef& image, const ImageCache& cache, std::size_t k,
                         ImageSearchTransport* live) {
  Observation obs;
  obs.tool = ToolName::ImageSearch;
  if (live) {
    try {
      obs.results = live->search(image, k);
    } catch (const std::exception& e) {
      obs.error = std::string("image search failed: ") + e.what();
    }
    return obs;
  }
  if (const auto* hit = cache.find(image.content_hash)) {
    auto n = std::min(k, hit->size());
    obs.results.assign(hit->begin(), hit->begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    obs.cache_miss = true;
  }
  return obs;
}

}  // namespace memplan::tools
