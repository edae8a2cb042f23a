#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/tools/action.hpp"

namespace memplan::tools {

struct SearchResult {
  std::string title;
  std::string snippet;
  std::string url;
  std::string image_url;
  std::optional<std::uint64_t> doc_id;
  double score = 0.0;

  nlohmann::json to_json() const;
  static SearchResult from_json(const nlohmann::json& j);
};

struct Observation {
  ToolName tool = ToolName::TextSearch;
  std::vector<SearchResult> results;
  bool truncated = false;
  bool cache_miss = false;
  std::optional<std::string> error;  // tool-error notice; the episode continues
};

struct RenderedObservation {
  std::string text;
  bool truncated = false;
};

inline constexpr const char* kNoResults = "no results found";
inline constexpr std::size_t kDefaultToolBudget = 4096;

// Deterministic rendering clipped to `budget` whitespace tokens.
RenderedObservation render_observation(const Observation& obs, std::size_t budget);

}  // namespace memplan::tools
