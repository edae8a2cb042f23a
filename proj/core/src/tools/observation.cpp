#include "memplan/tools/observation.hpp"

#include "memplan/common/text.hpp"

namespace memplan::tools {

nlohmann::json SearchResult::to_json() const {
  nlohmann::json j{{"title", title}, {"snippet", snippet}};
  if (!url.empty()) j["url"] = url;
  if (!image_url.empty()) j["image_url"] = image_url;
  if (doc_id) j["doc_id"] = *doc_id;
  if (score != 0.0) j["score"] = score;
  return j;
}

SearchResult SearchResult::from_json(const nlohmann::json& j) {
  SearchResult r;
  r.title = j.value("title", std::string());
  r.snippet = j.value("snippet", std::string());
  r.url = j.value("url", std::string());
  r.image_url = j.value("image_url", std::string());
  if (j.contains("doc_id")) r.doc_id = j.at("doc_id").get<std::uint64_t>();
  r.score = j.value("score", 0.0);
  return r;
}

RenderedObservation render_observation(const Observation& obs, std::size_t budget) {
  std::string full;
  if (obs.error) {
    full = "tool error: " + *obs.error;
  } else if (obs.results.empty()) {
    full = kNoResults;
  } else {
    for (std::size_t i = 0; i < obs.results.size(); ++i) {
      const auto& r = obs.results[i];
      if (i > 0) full += "\n";
      full += "[" + std::to_string(i + 1) + "] " + r.title + "\n" + r.snippet;
      if (!r.url.empty()) full += "\n(source: " + r.url + ")";
      if (!r.image_url.empty()) full += "\n(image: " + r.image_url + ")";
    }
  }
  RenderedObservation out;
  out.truncated = obs.truncated;
  if (budget == 0) budget = 1;
  if (text::count_tokens(full) <= budget) {
    out.text = std::move(full);
    return out;
  }
  auto pieces = text::proxy_tokens(full);
  for (std::size_t i = 0; i < budget && i < pieces.size(); ++i) out.text += pieces[i];
  out.truncated = true;
  return out;
}

}  // namespace memplan::tools
