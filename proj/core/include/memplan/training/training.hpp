#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/agent/episode.hpp"
#include "memplan/rl/export.hpp"

namespace memplan::training {

enum class Stage { Executor, Planner };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct StageConfig {
  Stage stage = Stage::Executor;
  // Model identifiers written into the export. Empty: taken from the gateway
  // binding of the corresponding agent.
  std::string trainable_model;
  std::string frozen_model;
  std::size_t group_size = 8;
  std::size_t batch_size = 128;  // export metadata only
  double learning_rate = 1e-6;   // export metadata only
  // Sampling temperature of the trainable role; the frozen role runs at 0.
  double rollout_temperature = 1.0;
  bool caption_in_stage1 = false;
  bool parallel_rollouts = false;
  std::filesystem::path export_dir;  // empty: nothing written
  rl::GrpoConfig grpo;
  agent::ExecutorSettings executor;

  void validate() const;
};

struct StageContext {
  gateway::Gateway& gateway;
  const agent::PromptLibrary& prompts;
  const tools::ToolBox& tools;
  judging::Judge& judge;
  gateway::Captioner* captioner = nullptr;
};

struct StageRollout {
  agent::Plan plan;
  agent::Trajectory trajectory;
  bool aborted = false;
  std::optional<std::string> error;
  bool intermediate_correct = false;
  bool final_correct = false;
  rl::RewardBreakdown reward;
  double advantage = 0.0;

  nlohmann::json to_json() const;
};

struct StageResult {
  std::string task_id;
  Stage stage = Stage::Executor;
  std::vector<StageRollout> rollouts;
  rl::GroupStats stats;
  rl::ExportBatch batch;
  std::optional<rl::ExportManifest> manifest;

  nlohmann::json to_json() const;
};

// Retrieved memory for one task, frozen so that every member of a planner
// group sees the same context.
struct ArchivedContext {
  std::string task_id;
  std::string question;
  std::optional<std::string> caption;
  memory::BucketKey bucket;
  memory::MemoryContext context;

  nlohmann::json to_json() const;
  static ArchivedContext from_json(const nlohmann::json& j);
};

inline constexpr const char* kContextSchema = "memplan.contexts.v1";

// Executor rollouts: the frozen planner plans from the question, the judge
// checks the first answer mid-episode and a wrong one gets one replan.
StageResult stage1_rollout(const agent::Task& task, StageContext& ctx, const StageConfig& cfg);

// Planner rollouts against the frozen executor. The planner decides on its
// own whether to reflect; both answers are judged afterwards for the reward.
StageResult stage2_rollout(const agent::Task& task, const ArchivedContext& context, StageContext& ctx,
                           const StageConfig& cfg);

// Runs one memory-building episode per task, in order, archiving the context
// each task retrieved before its own episode. Refuses to overwrite `archive`.
std::vector<ArchivedContext> collect_stage2_contexts(const std::vector<agent::Task>& tasks, agent::EpisodeDeps& deps,
                                                     const agent::EpisodeOptions& options,
                                                     const std::filesystem::path& archive);

std::vector<ArchivedContext> load_context_archive(const std::filesystem::path& archive);
std::string render_context_archive(const std::vector<ArchivedContext>& contexts);

}  // namespace memplan::training
