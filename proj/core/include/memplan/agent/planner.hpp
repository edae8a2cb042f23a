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

namespace memplan::agent {

inline constexpr const char* kPlannerAgent = "planner";
inline constexpr const char* kAnswerDirectly = "answer directly";
inline constexpr const char* kNoPriorExperience = "(no prior experience)";

// Renders memory units as numbered question/workflow blocks, or the
// no-experience filler when empty.
std::string render_memory_units(const std::vector<memory::MemoryUnit>& units);

class Planner {
 public:
  Planner(gateway::Gateway& gateway, const PromptLibrary& prompts, int max_tokens = 1024);

  // Planner prompt with question, caption and memory sections. A malformed
  // reply is retried once with a format reminder, then replaced by the
  // single-step fallback plan.
  Plan make_plan(const Task& task, const std::optional<std::string>& caption, const memory::MemoryContext& memory,
                 double temperature = 0.0) const;

  // At most once per plan. `judged_correct` is the intermediate verdict when
  // the caller has one; nullopt lets the planner decide on its own. Returns
  // true when a revision was attached. Throws PreconditionError when the
  // trajectory has no final answer.
  bool reflect_replan(const Task& task, const std::optional<std::string>& caption, Plan& plan,
                      const Trajectory& trajectory, std::optional<bool> judged_correct,
                      double temperature = 0.0) const;

 private:
  gateway::ChatResponse call(const std::string& prompt, double temperature) const;

  gateway::Gateway& gateway_;
  const PromptLibrary& prompts_;
  int max_tokens_;
};

}  // namespace memplan::agent
