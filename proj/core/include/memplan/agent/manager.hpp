#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memplan/agent/plan.hpp"
#include "memplan/agent/prompts.hpp"
#include "memplan/agent/task.hpp"
#include "memplan/agent/trajectory.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/memory/memory_store.hpp"

namespace memplan::agent {

inline constexpr const char* kCompressAgent = "compressor";
inline constexpr const char* kClassifierAgent = "classifier";

struct ManagerSettings {
  memory::RetrievalConfig retrieval;
  double replace_threshold = 0.90;
  // A success only replaces a success and a failure only a failure, so both
  // paradigms of one question can coexist.
  bool replace_within_label = true;
  // Ask the model for a category when the task has none.
  bool classify_category = false;
  std::vector<std::string> categories;
};

// Glue between episodes and the memory store: bucket selection, retrieval,
// trajectory compression and consolidation.
class MemoryManager {
 public:
  MemoryManager(gateway::Gateway& gateway, const PromptLibrary& prompts,
                std::shared_ptr<const memory::Embedder> embedder, memory::MemoryStore& store,
                ManagerSettings settings = {});

  memory::BucketKey bucket_for(const Task& task);
  memory::Query query_for(const Task& task, const std::optional<std::string>& caption) const;
  memory::MemoryContext retrieve(const Task& task, const std::optional<std::string>& caption,
                                 const memory::BucketKey& bucket);

  // Workflow summary through the compression prompt. An empty reply falls
  // back to a mechanical summary of the trajectory's actions.
  std::string compress(const Task& task, const std::optional<std::string>& caption, const Plan* plan,
                       const Trajectory& trajectory, memory::Judgment label);

  memory::ConsolidationOutcome consolidate(const Task& task, const std::optional<std::string>& caption,
                                           const memory::BucketKey& bucket, std::string workflow,
                                           memory::Judgment label);

  memory::MemoryStore& store() { return store_; }
  const memory::Embedder& embedder() const { return *embedder_; }
  const ManagerSettings& settings() const { return settings_; }

 private:
  gateway::Gateway& gateway_;
  const PromptLibrary& prompts_;
  std::shared_ptr<const memory::Embedder> embedder_;
  memory::MemoryStore& store_;
  ManagerSettings settings_;
  std::mutex mu_;
  std::map<std::string, std::string> category_cache_;
};

// Action-by-action summary used when the compression call returns nothing.
std::string mechanical_workflow(const Trajectory& trajectory);

}  // namespace memplan::agent
