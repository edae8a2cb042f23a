#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memplan/agent/plan.hpp"
#include "memplan/agent/prompts.hpp"
#include "memplan/agent/task.hpp"
#include "memplan/agent/trajectory.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/memory/memory_store.hpp"
#include "memplan/tools/toolbox.hpp"

namespace memplan::agent {

inline constexpr const char* kExecutorAgent = "executor";

struct ExecutorLimits {
  int assistant_turns = 10;
  int user_turns = 10;
};

struct ExecutorSettings {
  ExecutorLimits limits;
  double temperature = 0.0;
  int max_tokens = 2048;
};

// Text placed before the question in the first executor message, according
// to the prompt mode. `plan` is used in guideline mode, `memory` in
// long-context mode.
std::string executor_prefix(PromptMode mode, const PromptLibrary& prompts, const Plan* plan,
                            const memory::MemoryContext* memory);

// One executor ReAct loop. Turn counters are shared across a reflection
// resume, so the limits bound the whole episode.
class ExecutorSession {
 public:
  ExecutorSession(gateway::Gateway& gateway, const PromptLibrary& prompts, const tools::ToolBox& tools,
                  const Task& task, const std::string& prefix, ExecutorSettings settings = {});

  // Runs until an answer, turn exhaustion, or gateway exhaustion (aborted).
  void run();

  // Appends the revised plan as a plan_injection step and reopens the
  // episode. Requires a final answer and no abort.
  void inject_plan(const std::string& revision, const PlannerOutput& reflection);

  bool turns_left() const;
  const Trajectory& trajectory() const { return trajectory_; }
  const std::vector<gateway::ChatMessage>& messages() const { return messages_; }

 private:
  void add_observation(std::string text, bool tool_error, bool truncated, bool cache_miss,
                       std::optional<tools::ToolName> tool);
  void exhaust();

  gateway::Gateway& gateway_;
  const PromptLibrary& prompts_;
  const tools::ToolBox& tools_;
  std::optional<gateway::ImageRef> image_;
  ExecutorSettings settings_;
  std::vector<gateway::ChatMessage> messages_;
  Trajectory trajectory_;
};

}  // namespace memplan::agent
