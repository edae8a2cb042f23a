#pragma once

#include <optional>

#include <nlohmann/json.hpp>

#include "memplan/agent/plan.hpp"
#include "memplan/agent/trajectory.hpp"

namespace memplan::rl {

enum class RewardRole { Executor, Planner };

// Reward components and their weighted total. The total is kept in integer
// twentieths so equality checks are exact.
struct RewardBreakdown {
  RewardRole role = RewardRole::Executor;
  int r1 = 0;                          // final answer correct
  int r2 = 0;                          // executor: tool use; planner: reflection decision
  int r3 = 0;                          // format
  std::optional<int> r1_intermediate;  // planner only
  int twentieths = 0;

  double total() const { return twentieths / 20.0; }
  // Weighted sum of the components by the role's formula.
  int recompute() const;

  nlohmann::json to_json() const;
  static RewardBreakdown from_json(const nlohmann::json& j);
};

// 0.7 correctness + 0.2 tool + 0.1 format.
RewardBreakdown executor_reward(bool correct, bool tool_ok, bool format_ok);

// 0.7 final + 0.2 intermediate + 0.05 reflection + 0.05 format, where the
// reflection term pays for reflecting exactly when the first answer was wrong.
RewardBreakdown planner_reward(bool final_correct, bool intermediate_correct, bool reflection_triggered,
                               bool first_interaction_correct, bool format_ok);

// At least one parsed tool call whose observation is not a tool error.
bool tool_reward(const agent::Trajectory& trajectory);

// No malformed executor output and a real final <answer>.
bool format_reward(const agent::Trajectory& trajectory);

// Every planner completion matched its grammar.
bool plan_format_reward(const agent::Plan& plan);

}  // namespace memplan::rl
