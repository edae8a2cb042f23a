#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "memplan/memory/embedding.hpp"
#include "memplan/tools/observation.hpp"

namespace memplan::tools {

using DocId = std::uint64_t;

struct Passage {
  DocId id = 0;
  std::string title;
  std::string text;
  std::string url;
};

// Exact cosine nearest-neighbour index over unit-norm passage embeddings.
class CorpusIndex {
 public:
  explicit CorpusIndex(std::shared_ptr<const memory::Embedder> embedder);

  static CorpusIndex from_jsonl(const std::filesystem::path& path, std::shared_ptr<const memory::Embedder> embedder);

  void add(Passage passage);
  // Adds a passage with a caller-supplied unit-norm vector.
  void add(Passage passage, memory::Vector embedding);

  // k highest-similarity documents, descending, ties by ascending id.
  std::vector<std::pair<DocId, double>> nearest(const memory::Vector& query, std::size_t k) const;

  Observation text_search(const std::string& query, std::size_t k) const;

  std::size_t size() const { return passages_.size(); }
  std::size_t dimension() const { return dim_; }
  bool empty() const { return passages_.empty(); }
  const memory::Embedder& embedder() const { return *embedder_; }

 private:
  std::shared_ptr<const memory::Embedder> embedder_;
  std::size_t dim_;
  std::vector<Passage> passages_;
  std::vector<double> matrix_;  // row-major, one row per passage
};

}  // namespace memplan::tools
