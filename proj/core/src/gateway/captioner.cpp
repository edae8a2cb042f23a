#include "memplan/gateway/captioner.hpp"

#include <mutex>

#include "memplan/common/text.hpp"

namespace memplan::gateway {

Captioner::Captioner(Gateway& gateway, std::string prompt) : gateway_(gateway), prompt_(std::move(prompt)) {}

std::string Captioner::caption(const ImageRef& image) {
  if (image.content_hash.empty()) throw UnresolvableImage("image has no content hash: " + image.source);
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(image.content_hash);
    if (it != cache_.end()) return it->second;
  }
  std::unique_lock lock(mu_);
  auto it = cache_.find(image.content_hash);
  if (it != cache_.end()) return it->second;

  ChatRequest req;
  req.agent = "captioner";
  req.messages.push_back({Role::User, prompt_, image});
  auto resp = gateway_.complete(std::move(req));
  std::string caption(text::trim(resp.text));
  if (caption.empty()) throw MalformedResponse("empty caption for " + image.source);
  cache_.emplace(image.content_hash, caption);
  return caption;
}

std::size_t Captioner::cache_size() const {
  std::shared_lock lock(mu_);
  return cache_.size();
}

}  // namespace memplan::gateway
