#include "memplan/rl/reward.hpp"

#include "memplan/common/error.hpp"

namespace memplan::rl {

namespace {

// Weights in twentieths.
constexpr int kExecCorrect = 14, kExecTool = 4, kExecFormat = 2;
constexpr int kPlanFinal = 14, kPlanIntermediate = 4, kPlanReflect = 1, kPlanFormat = 1;

}  // namespace

int RewardBreakdown::recompute() const {
  if (role == RewardRole::Executor) return kExecCorrect * r1 + kExecTool * r2 + kExecFormat * r3;
  return kPlanFinal * r1 + kPlanIntermediate * r1_intermediate.value_or(0) + kPlanReflect * r2 + kPlanFormat * r3;
}

nlohmann::json RewardBreakdown::to_json() const {
  nlohmann::json j{{"role", role == RewardRole::Executor ? "executor" : "planner"},
                   {"r1", r1},
                   {"r2", r2},
                   {"r3", r3},
                   {"twentieths", twentieths},
                   {"total", total()}};
  j["r1_intermediate"] = r1_intermediate ? nlohmann::json(*r1_intermediate) : nlohmann::json(nullptr);
  return j;
}

RewardBreakdown RewardBreakdown::from_json(const nlohmann::json& j) {
  RewardBreakdown r;
  auto role = j.at("role").get<std::string>();
  if (role != "executor" && role != "planner") throw FormatError("unknown reward role " + role);
  r.role = role == "executor" ? RewardRole::Executor : RewardRole::Planner;
  r.r1 = j.at("r1").get<int>();
  r.r2 = j.at("r2").get<int>();
  r.r3 = j.at("r3").get<int>();
  if (!j.at("r1_intermediate").is_null()) r.r1_intermediate = j["r1_intermediate"].get<int>();
  r.twentieths = j.at("twentieths").get<int>();
  return r;
}

RewardBreakdown executor_reward(bool correct, bool tool_ok, bool format_ok) {
  RewardBreakdown r;
  r.role = RewardRole::Executor;
  r.r1 = correct;
  r.r2 = tool_ok;
  r.r3 = format_ok;
  r.twentieths = r.recompute();
  return r;
}

RewardBreakdown planner_reward(bool final_correct, bool intermediate_correct, bool reflection_triggered,
                               bool first_interaction_correct, bool format_ok) {
  RewardBreakdown r;
  r.role = RewardRole::Planner;
  r.r1 = final_correct;
  r.r1_intermediate = intermediate_correct;
  r.r2 = (first_interaction_correct && !reflection_triggered) || (!first_interaction_correct && reflection_triggered);
  r.r3 = format_ok;
  r.twentieths = r.recompute();
  return r;
}

bool tool_reward(const agent::Trajectory& trajectory) {
  const auto& steps = trajectory.steps;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    if (steps[i].kind != agent::StepKind::ToolCall) continue;
    const auto& next = steps[i + 1];
    if (next.kind == agent::StepKind::Observation && next.tool && !next.tool_error) return true;
  }
  return false;
}

bool format_reward(const agent::Trajectory& trajectory) {
  if (trajectory.aborted || trajectory.exhausted) return false;
  if (trajectory.count(agent::StepKind::Malformed) > 0) return false;
  return !trajectory.steps.empty() && trajectory.steps.back().kind == agent::StepKind::Answer;
}

bool plan_format_reward(const agent::Plan& plan) { return plan.format_ok && !plan.fallback; }

}  // namespace memplan::rl
