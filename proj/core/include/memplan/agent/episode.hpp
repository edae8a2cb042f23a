#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "memplan/agent/executor.hpp"
#include "memplan/agent/manager.hpp"
#include "memplan/agent/plan.hpp"
#include "memplan/agent/planner.hpp"
#include "memplan/agent/task.hpp"
#include "memplan/agent/trajectory.hpp"
#include "memplan/gateway/captioner.hpp"
#include "memplan/judging/judge.hpp"
#include "memplan/tools/toolbox.hpp"

namespace memplan::agent {

struct EpisodeOptions {
  PromptMode mode = PromptMode::Guideline;
  ExecutorSettings executor;
  double plan_temperature = 0.0;
  bool reflection = true;
  // Compress the finished trajectory into memory and update outcome counters.
  bool consolidate = true;
  // Use this context instead of retrieving (no usage counters touched).
  std::optional<memory::MemoryContext> preset_context;
};

// Everything an episode talks to. `manager` and `captioner` may be null:
// no memory, or no image captioning.
struct EpisodeDeps {
  gateway::Gateway& gateway;
  const PromptLibrary& prompts;
  const tools::ToolBox& tools;
  judging::Judge& judge;
  MemoryManager* manager = nullptr;
  gateway::Captioner* captioner = nullptr;
};

struct MemoryEntrySummary {
  memory::UnitId id = 0;
  memory::Judgment label = memory::Judgment::Correct;
  std::string workflow;
};

struct EpisodeRecord {
  std::string task_id;
  PromptMode mode = PromptMode::Guideline;
  std::optional<std::string> caption;
  std::optional<std::string> bucket;
  std::vector<MemoryEntrySummary> memory;
  std::optional<Plan> plan;
  Trajectory trajectory;
  std::optional<judging::CorrectnessVerdict> intermediate_verdict;
  std::optional<judging::CorrectnessVerdict> final_verdict;
  bool correct = false;
  std::optional<memory::ConsolidationOutcome> consolidation;
  std::optional<std::string> error;

  bool reflection_triggered() const { return plan && plan->reflection_triggered; }

  nlohmann::json to_json() const;
  static EpisodeRecord from_json(const nlohmann::json& j);
};

// retrieve -> caption -> plan -> execute -> judge -> optional reflection and
// resumed execution -> judge -> consolidate. Component failures end up in
// `error`; nothing is thrown past the record.
EpisodeRecord run_episode(const Task& task, EpisodeDeps& deps, const EpisodeOptions& options = {});

// Caption of the task image, or nullopt for text-only tasks.
std::optional<std::string> caption_for(const Task& task, gateway::Captioner* captioner);

}  // namespace memplan::agent
