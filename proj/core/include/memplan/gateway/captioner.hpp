#pragma once

#include <map>
#include <shared_mutex>
#include <string>

#include "memplan/gateway/gateway.hpp"

namespace memplan::gateway {

// Converts images to text captions through the gateway, caching by content
// hash so each distinct image costs exactly one backend call.
class Captioner {
 public:
  Captioner(Gateway& gateway, std::string prompt);

  std::string caption(const ImageRef& image);
  std::size_t cache_size() const;

 private:
  Gateway& gateway_;
  std::string prompt_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> cache_;
};

}  // namespace memplan::gateway
