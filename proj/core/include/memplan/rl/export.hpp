#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/rl/advantage.hpp"
#include "memplan/rl/grpo.hpp"
#include "memplan/rl/reward.hpp"

namespace memplan::rl {

inline constexpr const char* kExportSchema = "memplan.signals.v1";
inline constexpr const char* kManifestSchema = "memplan.signals.manifest.v1";

struct ExportRecord {
  std::vector<TokenRecord> tokens;
  RewardBreakdown reward;
  double advantage = 0.0;
  bool failed = false;  // aborted rollout, kept for its negative signal
  nlohmann::json facts = nlohmann::json::object();
};

struct ExportBatch {
  std::string task_id;
  std::string stage;  // "executor", "planner", "ttl"
  agent::Source trainable = agent::Source::Planner;
  std::string trainable_model;
  std::string frozen_model;
  GrpoConfig config;
  GroupStats stats;
  std::vector<ExportRecord> records;
  nlohmann::json metadata = nlohmann::json::object();
};

struct ExportManifest {
  std::filesystem::path file;
  std::size_t records = 0;
  std::string sha256;
  std::string task_id;
  std::string stage;

  nlohmann::json to_json() const;
};

// Writes `<stem>.jsonl` (one record per rollout) and `<stem>.manifest.json`.
// Identical inputs give byte-identical files. Throws on an empty batch.
ExportManifest export_training_signals(const ExportBatch& batch, const std::filesystem::path& stem);

std::string render_export(const ExportBatch& batch);

struct VerifyReport {
  std::size_t records = 0;
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

// Re-reads an export through its manifest: hash, record count, reward
// recomputation, masks against sources, and trainable/frozen separation.
VerifyReport verify_export(const std::filesystem::path& manifest_path);

}  // namespace memplan::rl
