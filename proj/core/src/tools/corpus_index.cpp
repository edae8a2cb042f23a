#include "memplan/tools/corpus_index.hpp"

#include <algorithm>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"

namespace memplan::tools {

CorpusIndex::CorpusIndex(std::shared_ptr<const memory::Embedder> embedder)
    : embedder_(std::move(embedder)), dim_(embedder_ ? embedder_->dimension() : 0) {
  if (!embedder_) throw PreconditionError("corpus index needs an embedder");
}

CorpusIndex CorpusIndex::from_jsonl(const std::filesystem::path& path,
                                    std::shared_ptr<const memory::Embedder> embedder) {
  CorpusIndex index(std::move(embedder));
  for (const auto& rec : read_jsonl(path)) {
    Passage p;
    try {
      p.id = rec.at("id").get<DocId>();
      p.text = rec.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": corpus record needs id and text (" + e.what() + ")");
    }
    p.title = rec.value("title", std::string());
    p.url = rec.value("url", std::string());
    index.add(std::move(p));
  }
  return index;
}

void CorpusIndex::add(Passage passage) {
  auto v = embedder_->encode(passage.title.empty() ? passage.text : passage.title + "\n" + passage.text);
  add(std::move(passage), std::move(v));
}

void CorpusIndex::add(Passage passage, memory::Vector embedding) {
  if (embedding.size() != dim_) throw PreconditionError("passage embedding has the wrong dimension");
  if (!memory::is_unit(embedding)) throw PreconditionError("passage embedding is not unit-norm");
  for (const auto& p : passages_) {
    if (p.id == passage.id) throw PreconditionError("duplicate document id " + std::to_string(passage.id));
  }
  matrix_.insert(matrix_.end(), embedding.begin(), embedding.end());
  passages_.push_back(std::move(passage));
}

std::vector<std::pair<DocId, double>> CorpusIndex::nearest(const memory::Vector& query, std::size_t k) const {
  if (passages_.empty()) throw PreconditionError("text search over an empty index");
  if (k == 0) throw PreconditionError("k must be >= 1");
  std::vector<std::pair<DocId, double>> scored;
  scored.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    std::span<const double> row(matrix_.data() + i * dim_, dim_);
    scored.emplace_back(passages_[i].id, memory::dot(query, row));
  }
  auto cmp = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  auto n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), cmp);
  scored.resize(n);
  return scored;
}

Observation CorpusIndex::text_search(const std::string& query, std::size_t k) const {
  Observation obs;
  obs.tool = ToolName::TextSearch;
  for (const auto& [id, sim] : nearest(embedder_->encode(query), k)) {
    auto it = std::find_if(passages_.begin(), passages_.end(), [&](const auto& p) { return p.id == id; });
    SearchResult r;
    r.title = it->title;
    r.snippet = it->text;
    r.url = it->url;
    r.doc_id = id;
    r.score = sim;
    obs.results.push_back(std::move(r));
  }
  return obs;
}

}  // namespace memplan::tools
