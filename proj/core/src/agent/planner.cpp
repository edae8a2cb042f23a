#include "memplan/agent/planner.hpp"

#include "memplan/common/error.hpp"
#include "memplan/common/text.hpp"

namespace memplan::agent {

namespace {

std::string caption_section(const std::optional<std::string>& caption) {
  return caption ? "Image description: " + *caption + "\n" : std::string();
}

std::string strip_think(std::string_view s, std::string& thought) {
  std::string body;
  if (text::extract_tag(s, "think", body)) {
    thought = std::string(text::trim(body));
    auto end = s.find("</think>");
    return std::string(s.substr(end + 8));
  }
  thought.clear();
  return std::string(s);
}

// Steps inside <plan>...</plan>, empty when absent or blank.
std::vector<std::string> plan_body(std::string_view s) {
  std::string body;
  if (!text::extract_tag(s, "plan", body)) return {};
  return parse_plan_steps(body);
}

}  // namespace

std::string render_memory_units(const std::vector<memory::MemoryUnit>& units) {
  if (units.empty()) return kNoPriorExperience;
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] Question: " + units[i].question + "\nWorkflow:\n" + units[i].workflow;
  }
  return out;
}

Planner::Planner(gateway::Gateway& gateway, const PromptLibrary& prompts, int max_tokens)
    : gateway_(gateway), prompts_(prompts), max_tokens_(max_tokens) {}

gateway::ChatResponse Planner::call(const std::string& prompt, double temperature) const {
  gateway::ChatRequest req;
  req.agent = kPlannerAgent;
  req.messages.push_back({gateway::Role::User, prompt, std::nullopt});
  req.temperature = temperature;
  req.max_tokens = max_tokens_;
  return gateway_.complete(std::move(req));
}

Plan Planner::make_plan(const Task& task, const std::optional<std::string>& caption,
                        const memory::MemoryContext& memory, double temperature) const {
  auto prompt = prompts_.render("planner", {{"question", task.question},
                                            {"caption_section", caption_section(caption)},
                                            {"positives", render_memory_units(memory.positives)},
                                            {"negatives", render_memory_units(memory.negatives)}});
  Plan plan;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = call(attempt == 0 ? prompt : prompt + prompts_.get("planner_reminder"), temperature);
    plan.output = {resp.text, resp.tokens};
    auto rest = strip_think(resp.text, plan.thought);
    plan.steps = plan_body(rest);
    if (!plan.steps.empty()) return plan;
    plan.format_ok = false;
  }
  plan.steps = {kAnswerDirectly};
  plan.fallback = true;
  return plan;
}

bool Planner::reflect_replan(const Task& task, const std::optional<std::string>& caption, Plan& plan,
                             const Trajectory& trajectory, std::optional<bool> judged_correct,
                             double temperature) const {
  if (!trajectory.final_answer) throw PreconditionError("reflection needs a trajectory with a final answer");
  if (plan.reflection_consulted) return false;
  if (judged_correct.value_or(false)) return false;
  plan.reflection_consulted = true;

  std::string note = judged_correct ? "The final answer was checked and found to be incorrect. Provide supplementary steps."
                                    : "Judge for yourself whether the final answer is reliable.";
  auto prompt = prompts_.render("replan", {{"question", task.question},
                                           {"caption_section", caption_section(caption)},
                                           {"plan", plan.render()},
                                           {"history", trajectory.transcript()},
                                           {"judgment_note", note}});
  auto resp = call(prompt, temperature);
  plan.reflection = PlannerOutput{resp.text, resp.tokens};

  std::string thought;
  auto rest = strip_think(resp.text, thought);
  auto steps = plan_body(rest);
  if (!steps.empty()) {
    plan.revision = std::move(steps);
    plan.reflection_triggered = true;
    return true;
  }
  if (rest.find("<keep/>") == std::string::npos) plan.format_ok = false;
  return false;
}

}  // namespace memplan::agent
