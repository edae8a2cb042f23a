#include "memplan/memory/memory_store.hpp"

#include <algorithm>
#include <limits>
#include <mutex>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"

namespace memplan::memory {

void RetrievalConfig::validate() const {
  for (double w : {alpha_question, alpha_caption, lambda_similarity, lambda_value, lambda_frequency}) {
    if (w < 0.0) throw UserError("retrieval weights must be non-negative");
  }
  if (norm_epsilon <= 0.0) throw UserError("retrieval norm epsilon must be positive");
}

Query Query::encode(const Embedder& embedder, std::string_view question, std::optional<std::string_view> caption) {
  Query q;
  q.question = embedder.encode(question);
  if (caption) q.caption = embedder.encode(*caption);
  return q;
}

std::vector<UnitId> MemoryContext::ids() const {
  std::vector<UnitId> out;
  for (const auto& u : positives) out.push_back(u.id);
  for (const auto& u : negatives) out.push_back(u.id);
  return out;
}

nlohmann::json MemoryContext::to_json() const {
  nlohmann::json pos = nlohmann::json::array();
  nlohmann::json neg = nlohmann::json::array();
  for (const auto& u : positives) pos.push_back(u.to_json());
  for (const auto& u : negatives) neg.push_back(u.to_json());
  return {{"positives", pos}, {"negatives", neg}};
}

MemoryContext MemoryContext::from_json(const nlohmann::json& j) {
  MemoryContext ctx;
  for (const auto& u : j.at("positives")) ctx.positives.push_back(MemoryUnit::from_json(u));
  for (const auto& u : j.at("negatives")) ctx.negatives.push_back(MemoryUnit::from_json(u));
  return ctx;
}

bool ClearPolicy::matches(const MemoryUnit& unit) const {
  if (label && unit.label != *label) return false;
  return unit.value() < max_value && unit.usage >= min_usage;
}

MemoryStore::MemoryStore(const MemoryStore& other) {
  std::shared_lock lock(other.mu_);
  units_ = other.units_;
  next_id_ = other.next_id_;
  clock_ = other.clock_;
}

MemoryStore& MemoryStore::operator=(const MemoryStore& other) {
  if (this == &other) return *this;
  std::unique_lock mine(mu_, std::defer_lock);
  std::shared_lock theirs(other.mu_, std::defer_lock);
  std::lock(mine, theirs);
  units_ = other.units_;
  next_id_ = other.next_id_;
  clock_ = other.clock_;
  return *this;
}

std::vector<ScoreBreakdown> MemoryStore::score_locked(const Query& query, const BucketKey& bucket,
                                                      const RetrievalConfig& cfg) const {
  std::vector<ScoreBreakdown> out;
  for (const auto& u : units_) {
    if (u.bucket != bucket) continue;
    ScoreBreakdown b;
    b.id = u.id;
    b.sim_question = dot(query.question, u.question_embedding);
    if (query.caption && u.caption_embedding) {
      b.sim_caption = dot(*query.caption, *u.caption_embedding);
      b.similarity = cfg.alpha_question * b.sim_question + cfg.alpha_caption * *b.sim_caption;
    } else {
      b.similarity = b.sim_question;
    }
    b.value = u.value();
    b.frequency = u.frequency();
    out.push_back(b);
  }
  if (out.empty()) return out;
  auto [lo, hi] = std::minmax_element(out.begin(), out.end(),
                                      [](const auto& a, const auto& b) { return a.similarity < b.similarity; });
  double min_sim = lo->similarity;
  double span = hi->similarity - min_sim + cfg.norm_epsilon;
  for (auto& b : out) {
    b.similarity_normalized = (b.similarity - min_sim) / span;
    b.score = cfg.lambda_similarity * b.similarity_normalized + cfg.lambda_value * b.value +
              cfg.lambda_frequency * b.frequency;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

std::vector<ScoreBreakdown> MemoryStore::score_all(const Query& query, const BucketKey& bucket,
                                                   const RetrievalConfig& cfg) const {
  std::shared_lock lock(mu_);
  return score_locked(query, bucket, cfg);
}

MemoryContext MemoryStore::retrieve(const Query& query, const BucketKey& bucket, const RetrievalConfig& cfg) {
  std::unique_lock lock(mu_);
  MemoryContext ctx;
  for (const auto& s : score_locked(query, bucket, cfg)) {
    auto* unit = find_locked(s.id);
    auto& side = unit->label == Judgment::Correct ? ctx.positives : ctx.negatives;
    auto limit = unit->label == Judgment::Correct ? cfg.k_positive : cfg.k_negative;
    if (side.size() >= limit) continue;
    ++unit->usage;
    side.push_back(*unit);
  }
  return ctx;
}

ConsolidationOutcome MemoryStore::consolidate(NewMemory memory, const BucketKey& bucket, double threshold,
                                              bool same_label) {
  if (!is_unit(memory.question_embedding)) throw PreconditionError("consolidate: embedding is not unit-norm");
  std::unique_lock lock(mu_);
  MemoryUnit* best = nullptr;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (auto& u : units_) {
    if (u.bucket != bucket || (same_label && u.label != memory.label)) continue;
    double sim = dot(memory.question_embedding, u.question_embedding);
    if (sim > best_sim) {
      best_sim = sim;
      best = &u;
    }
  }
  ConsolidationOutcome out;
  out.similarity = best ? best_sim : 0.0;
  if (best && best_sim >= threshold) {
    best->question = std::move(memory.question);
    best->question_embedding = std::move(memory.question_embedding);
    best->caption = std::move(memory.caption);
    best->caption_embedding = std::move(memory.caption_embedding);
    best->workflow = std::move(memory.workflow);
    best->label = memory.label;
    out.kind = ConsolidationOutcome::Kind::Replaced;
    out.id = best->id;
    return out;
  }
  MemoryUnit unit;
  unit.id = next_id_++;
  unit.bucket = bucket;
  unit.question = std::move(memory.question);
  unit.question_embedding = std::move(memory.question_embedding);
  unit.caption = std::move(memory.caption);
  unit.caption_embedding = std::move(memory.caption_embedding);
  unit.workflow = std::move(memory.workflow);
  unit.label = memory.label;
  unit.created = ++clock_;
  out.kind = ConsolidationOutcome::Kind::Inserted;
  out.id = unit.id;
  units_.push_back(std::move(unit));
  return out;
}

void MemoryStore::record_outcome(std::span<const UnitId> ids, bool success) {
  std::unique_lock lock(mu_);
  for (auto id : ids) {
    if (!find_locked(id)) throw PreconditionError("record_outcome: unknown memory unit " + std::to_string(id));
  }
  if (!success) return;
  for (auto id : ids) ++find_locked(id)->success;
}

std::size_t MemoryStore::selective_clear(const ClearPolicy& policy, bool dry_run) {
  std::unique_lock lock(mu_);
  auto n = static_cast<std::size_t>(
      std::count_if(units_.begin(), units_.end(), [&](const auto& u) { return policy.matches(u); }));
  if (!dry_run) {
    std::erase_if(units_, [&](const auto& u) { return policy.matches(u); });
  }
  return n;
}

UnitId MemoryStore::insert(MemoryUnit unit) {
  std::unique_lock lock(mu_);
  if (unit.id == 0) unit.id = next_id_;
  if (find_locked(unit.id)) throw PreconditionError("duplicate memory unit id " + std::to_string(unit.id));
  next_id_ = std::max(next_id_, unit.id + 1);
  if (unit.created == 0) unit.created = ++clock_;
  clock_ = std::max(clock_, unit.created);
  auto pos = std::lower_bound(units_.begin(), units_.end(), unit.id,
                              [](const MemoryUnit& u, UnitId id) { return u.id < id; });
  auto id = unit.id;
  units_.insert(pos, std::move(unit));
  return id;
}

MemoryUnit* MemoryStore::find_locked(UnitId id) {
  auto it = std::lower_bound(units_.begin(), units_.end(), id,
                             [](const MemoryUnit& u, UnitId v) { return u.id < v; });
  return it != units_.end() && it->id == id ? &*it : nullptr;
}

std::optional<MemoryUnit> MemoryStore::find(UnitId id) const {
  std::shared_lock lock(mu_);
  for (const auto& u : units_) {
    if (u.id == id) return u;
  }
  return std::nullopt;
}

std::vector<MemoryUnit> MemoryStore::units() const {
  std::shared_lock lock(mu_);
  return units_;
}

std::size_t MemoryStore::size() const {
  std::shared_lock lock(mu_);
  return units_.size();
}

std::size_t MemoryStore::bucket_size(const BucketKey& bucket) const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(units_.begin(), units_.end(), [&](const auto& u) { return u.bucket == bucket; }));
}

std::string MemoryStore::to_jsonl() const {
  std::shared_lock lock(mu_);
  std::vector<json> records;
  records.push_back({{"schema", kSchema}, {"next_id", next_id_}, {"clock", clock_}});
  for (const auto& u : units_) records.push_back(u.to_json());
  return dump_jsonl(records);
}

MemoryStore MemoryStore::from_jsonl(const std::string& content, const std::string& origin) {
  auto records = parse_jsonl(content, origin);
  if (records.empty() || records.front().value("schema", std::string()) != kSchema) {
    throw FormatError(origin + ": missing or unsupported schema header");
  }
  MemoryStore store;
  for (std::size_t i = 1; i < records.size(); ++i) store.insert(MemoryUnit::from_json(records[i]));
  store.next_id_ = std::max(store.next_id_, records.front().value("next_id", UnitId{1}));
  store.clock_ = std::max(store.clock_, records.front().value("clock", std::uint64_t{0}));
  return store;
}

void MemoryStore::save(const std::filesystem::path& path) const { write_file_atomic(path, to_jsonl()); }

MemoryStore MemoryStore::load(const std::filesystem::path& path) { return from_jsonl(read_file(path), path.string()); }

MemoryStore MemoryStore::load_or_empty(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  return load(path);
}

}  // namespace memplan::memory
