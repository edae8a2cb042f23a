#pragma once

#include <cstddef>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/memory/embedding.hpp"

namespace memplan::memory {

// Contrastive plan pair: the shortest successful plan and one failed plan
// produced for the same question.
struct MetaPlanPair {
  std::string question;
  Vector question_embedding;
  std::string success_plan;
  std::string failed_plan;

  nlohmann::json to_json() const;
  static MetaPlanPair from_json(const nlohmann::json& j);
};

class MetaPlanStore {
 public:
  MetaPlanStore() = default;
  MetaPlanStore(const MetaPlanStore& other);
  MetaPlanStore& operator=(const MetaPlanStore& other);

  void add(MetaPlanPair pair);

  // Top-k pairs by question cosine, ties by insertion order.
  std::vector<MetaPlanPair> select(const Vector& question_embedding, std::size_t k) const;

  std::size_t size() const;
  std::vector<MetaPlanPair> pairs() const;

  std::string to_jsonl() const;
  static MetaPlanStore from_jsonl(const std::string& content, const std::string& origin = "meta plan store");
  void save(const std::filesystem::path& path) const;
  static MetaPlanStore load_or_empty(const std::filesystem::path& path);

  static constexpr const char* kSchema = "memplan.metaplan.v1";

 private:
  mutable std::shared_mutex mu_;
  std::vector<MetaPlanPair> pairs_;
};

}  // namespace memplan::memory
