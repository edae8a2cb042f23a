#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "memplan/memory/memory_unit.hpp"

namespace memplan::memory {

struct RetrievalConfig {
  double alpha_question = 0.8;
  double alpha_caption = 0.2;
  double lambda_similarity = 0.7;
  double lambda_value = 0.3;
  double lambda_frequency = 0.3;
  std::size_t k_positive = 2;
  std::size_t k_negative = 1;
  double norm_epsilon = 1e-8;

  void validate() const;
};

struct Query {
  Vector question;
  std::optional<Vector> caption;

  static Query encode(const Embedder& embedder, std::string_view question,
                      std::optional<std::string_view> caption = std::nullopt);
};

struct ScoreBreakdown {
  UnitId id = 0;
  double sim_question = 0.0;
  std::optional<double> sim_caption;
  double similarity = 0.0;             // blended raw similarity
  double similarity_normalized = 0.0;  // min-max within the bucket
  double value = 0.0;
  double frequency = 0.0;
  double score = 0.0;
};

struct MemoryContext {
  std::vector<MemoryUnit> positives;
  std::vector<MemoryUnit> negatives;

  bool empty() const { return positives.empty() && negatives.empty(); }
  std::vector<UnitId> ids() const;

  nlohmann::json to_json() const;
  static MemoryContext from_json(const nlohmann::json& j);
};

struct NewMemory {
  std::string question;
  Vector question_embedding;
  std::optional<std::string> caption;
  std::optional<Vector> caption_embedding;
  std::string workflow;
  Judgment label = Judgment::Correct;
};

struct ConsolidationOutcome {
  enum class Kind { Replaced, Inserted };
  Kind kind = Kind::Inserted;
  UnitId id = 0;
  double similarity = 0.0;  // best cosine found in the bucket (0 when empty)
};

struct ClearPolicy {
  std::optional<Judgment> label = Judgment::Incorrect;
  double max_value = 0.25;  // strict upper bound on s/(u+1)
  std::uint64_t min_usage = 4;

  bool matches(const MemoryUnit& unit) const;
};

// Episodic workflow memory. Scoring and retrieval follow the hybrid
// similarity/value/frequency rule; mutations serialize through one writer.
class MemoryStore {
 public:
  MemoryStore() = default;
  MemoryStore(const MemoryStore& other);
  MemoryStore& operator=(const MemoryStore& other);

  // Every unit in `bucket`, scored and sorted by descending score, ties by id.
  std::vector<ScoreBreakdown> score_all(const Query& query, const BucketKey& bucket,
                                        const RetrievalConfig& cfg) const;

  // Top-k correct and top-k incorrect units by score. Bumps the usage count
  // of every returned unit.
  MemoryContext retrieve(const Query& query, const BucketKey& bucket, const RetrievalConfig& cfg);

  // Replaces the most similar unit when its question cosine reaches
  // `threshold` (keeping id and counters), otherwise inserts a new unit.
  // With `same_label`, only units carrying the new memory's label compete.
  ConsolidationOutcome consolidate(NewMemory memory, const BucketKey& bucket, double threshold,
                                   bool same_label = false);

  // Adds one success to each listed unit on success. Throws on unknown ids.
  void record_outcome(std::span<const UnitId> ids, bool success);

  std::size_t selective_clear(const ClearPolicy& policy, bool dry_run = false);

  // Inserts a fully specified unit (fixtures, persistence). Assigns an id
  // when `unit.id == 0`.
  UnitId insert(MemoryUnit unit);

  std::optional<MemoryUnit> find(UnitId id) const;
  std::vector<MemoryUnit> units() const;
  std::size_t size() const;
  std::size_t bucket_size(const BucketKey& bucket) const;

  std::string to_jsonl() const;
  static MemoryStore from_jsonl(const std::string& content, const std::string& origin = "memory store");
  void save(const std::filesystem::path& path) const;
  static MemoryStore load(const std::filesystem::path& path);
  // Missing file yields an empty store.
  static MemoryStore load_or_empty(const std::filesystem::path& path);

  static constexpr const char* kSchema = "memplan.memory.v1";

 private:
  std::vector<ScoreBreakdown> score_locked(const Query& query, const BucketKey& bucket,
                                           const RetrievalConfig& cfg) const;
  MemoryUnit* find_locked(UnitId id);

  mutable std::shared_mutex mu_;
  std::vector<MemoryUnit> units_;  // ascending id
  UnitId next_id_ = 1;
  std::uint64_t clock_ = 0;
};

}  // namespace memplan::memory
