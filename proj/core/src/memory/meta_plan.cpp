#include "memplan/memory/meta_plan.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"

namespace memplan::memory {

nlohmann::json MetaPlanPair::to_json() const {
  return {{"question", question},
          {"question_embedding", question_embedding},
          {"success_plan", success_plan},
          {"failed_plan", failed_plan}};
}

MetaPlanPair MetaPlanPair::from_json(const nlohmann::json& j) {
  try {
    return {j.at("question").get<std::string>(), j.at("question_embedding").get<Vector>(),
            j.at("success_plan").get<std::string>(), j.at("failed_plan").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad meta plan record: ") + e.what());
  }
}

MetaPlanStore::MetaPlanStore(const MetaPlanStore& other) {
  std::shared_lock lock(other.mu_);
  pairs_ = other.pairs_;
}

MetaPlanStore& MetaPlanStore::operator=(const MetaPlanStore& other) {
  if (this == &other) return *this;
  auto copy = other.pairs();
  std::unique_lock lock(mu_);
  pairs_ = std::move(copy);
  return *this;
}

void MetaPlanStore::add(MetaPlanPair pair) {
  if (pair.success_plan.empty() || pair.failed_plan.empty()) {
    throw PreconditionError("meta plan pair needs both a successful and a failed plan");
  }
  std::unique_lock lock(mu_);
  pairs_.push_back(std::move(pair));
}

std::vector<MetaPlanPair> MetaPlanStore::select(const Vector& question_embedding, std::size_t k) const {
  std::shared_lock lock(mu_);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    ranked.emplace_back(dot(question_embedding, pairs_[i].question_embedding), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<MetaPlanPair> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(pairs_[ranked[i].second]);
  return out;
}

std::size_t MetaPlanStore::size() const {
  std::shared_lock lock(mu_);
  return pairs_.size();
}

std::vector<MetaPlanPair> MetaPlanStore::pairs() const {
  std::shared_lock lock(mu_);
  return pairs_;
}

std::string MetaPlanStore::to_jsonl() const {
  std::shared_lock lock(mu_);
  std::vector<json> records{{{"schema", kSchema}}};
  for (const auto& p : pairs_) records.push_back(p.to_json());
  return dump_jsonl(records);
}

MetaPlanStore MetaPlanStore::from_jsonl(const std::string& content, const std::string& origin) {
  auto records = parse_jsonl(content, origin);
  if (records.empty() || records.front().value("schema", std::string()) != kSchema) {
    throw FormatError(origin + ": missing or unsupported schema header");
  }
  MetaPlanStore store;
  for (std::size_t i = 1; i < records.size(); ++i) store.add(MetaPlanPair::from_json(records[i]));
  return store;
}

void MetaPlanStore::save(const std::filesystem::path& path) const { write_file_atomic(path, to_jsonl()); }

MetaPlanStore MetaPlanStore::load_or_empty(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  return from_jsonl(read_file(path), path.string());
}

}  // namespace memplan::memory
