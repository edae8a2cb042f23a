#include "memplan/agent/executor.hpp"

#include "memplan/agent/planner.hpp"
#include "memplan/common/error.hpp"
#include "memplan/common/text.hpp"

namespace memplan::agent {

namespace {

Segment proxy_segment(Source source, const std::string& text) {
  Segment seg;
  seg.source = source;
  seg.text = text;
  for (auto& piece : text::proxy_tokens(text)) seg.tokens.push_back({std::move(piece), 0.0});
  return seg;
}

Segment model_segment(Source source, const std::string& text, const std::vector<gateway::TokenLogprob>& tokens) {
  if (tokens.empty()) return proxy_segment(source, text);
  Segment seg;
  seg.source = source;
  seg.text = text;
  seg.tokens = tokens;
  seg.has_logprobs = true;
  return seg;
}

std::optional<gateway::ImageRef> resolve_image(const Task& task) {
  if (!task.image) return std::nullopt;
  const auto& src = *task.image;
  if (src.rfind("http://", 0) == 0 || src.rfind("https://", 0) == 0) return gateway::ImageRef::from_url(src);
  return gateway::ImageRef::from_file(src);
}

}  // namespace

std::string executor_prefix(PromptMode mode, const PromptLibrary& prompts, const Plan* plan,
                            const memory::MemoryContext* memory) {
  switch (mode) {
    case PromptMode::NoExtra: return {};
    case PromptMode::Guideline:
      if (!plan) return {};
      return prompts.render("guideline_prefix", {{"plan", plan->render()}});
    case PromptMode::LongContextMemory: {
      if (!memory || memory->empty()) return {};
      std::string text = "Successful workflows:\n" + render_memory_units(memory->positives) +
                         "\n\nFailed workflows:\n" + render_memory_units(memory->negatives);
      return prompts.render("memory_prefix", {{"memory", text}});
    }
  }
  return {};
}

ExecutorSession::ExecutorSession(gateway::Gateway& gateway, const PromptLibrary& prompts, const tools::ToolBox& tools,
                                 const Task& task, const std::string& prefix, ExecutorSettings settings)
    : gateway_(gateway), prompts_(prompts), tools_(tools), image_(resolve_image(task)), settings_(settings) {
  if (settings_.limits.assistant_turns < 1 || settings_.limits.user_turns < 0) {
    throw UserError("executor turn limits must be positive");
  }
  auto system = prompts_.render("executor_system", {{"text_k", std::to_string(tools_.config().text_k)},
                                                    {"image_k", std::to_string(tools_.config().image_k)}});
  auto user = prompts_.render("executor_user", {{"prefix", prefix}, {"references", ""}, {"question", task.question}});
  messages_.push_back({gateway::Role::System, std::move(system), std::nullopt});
  messages_.push_back({gateway::Role::User, std::move(user), image_});
}

bool ExecutorSession::turns_left() const {
  return trajectory_.assistant_turns < settings_.limits.assistant_turns;
}

void ExecutorSession::exhaust() {
  trajectory_.exhausted = true;
  trajectory_.final_answer = kUnableToDetermine;
  if (!trajectory_.intermediate_answer) trajectory_.intermediate_answer = kUnableToDetermine;
}

void ExecutorSession::add_observation(std::string text, bool tool_error, bool truncated, bool cache_miss,
                                      std::optional<tools::ToolName> tool) {
  Step step;
  step.kind = StepKind::Observation;
  step.source = Source::Tool;
  step.text = text;
  step.tool = tool;
  step.tool_error = tool_error;
  step.truncated = truncated;
  step.cache_miss = cache_miss;
  step.turn = trajectory_.assistant_turns;
  trajectory_.steps.push_back(std::move(step));
  ++trajectory_.user_turns;
  auto wrapped = tool ? "<tool_response>\n" + text + "\n</tool_response>" : text;
  trajectory_.segments.push_back(proxy_segment(Source::Tool, wrapped));
  messages_.push_back({gateway::Role::User, std::move(wrapped), std::nullopt});
}

void ExecutorSession::run() {
  if (trajectory_.aborted || trajectory_.final_answer) return;
  const auto& limits = settings_.limits;
  while (true) {
    if (trajectory_.assistant_turns >= limits.assistant_turns) return exhaust();

    gateway::ChatRequest req;
    req.agent = kExecutorAgent;
    req.messages = messages_;
    req.temperature = settings_.temperature;
    req.max_tokens = settings_.max_tokens;
    gateway::ChatResponse resp;
    try {
      resp = gateway_.complete(std::move(req));
    } catch (const gateway::GatewayError& e) {
      trajectory_.aborted = true;
      trajectory_.abort_reason = e.what();
      return;
    }
    int turn = ++trajectory_.assistant_turns;
    trajectory_.segments.push_back(model_segment(Source::Executor, resp.text, resp.tokens));
    messages_.push_back({gateway::Role::Assistant, resp.text, std::nullopt});

    auto parsed = tools::parse_action(resp.text);
    auto push = [&](StepKind kind, std::string text, std::optional<tools::ToolName> tool = std::nullopt) {
      Step s;
      s.kind = kind;
      s.source = Source::Executor;
      s.text = std::move(text);
      s.tool = tool;
      s.turn = turn;
      trajectory_.steps.push_back(std::move(s));
    };
    if (!parsed.thought.empty()) push(StepKind::Thought, parsed.thought);

    if (const auto* answer = std::get_if<tools::FinalAnswer>(&parsed.action)) {
      push(StepKind::Answer, answer->text);
      trajectory_.final_answer = answer->text;
      if (!trajectory_.intermediate_answer) {
        trajectory_.intermediate_answer = answer->text;
        trajectory_.intermediate_step = trajectory_.steps.size() - 1;
      }
      return;
    }
    if (const auto* call = std::get_if<tools::ToolCall>(&parsed.action)) {
      push(StepKind::ToolCall, call->raw, call->name);
      if (trajectory_.user_turns >= limits.user_turns) return exhaust();
      auto obs = tools_.execute(*call, image_);
      auto rendered = tools_.render(obs);
      add_observation(std::move(rendered.text), obs.error.has_value(), rendered.truncated, obs.cache_miss, call->name);
      continue;
    }
    const auto& bad = std::get<tools::Malformed>(parsed.action);
    push(StepKind::Malformed, resp.text);
    if (trajectory_.user_turns >= limits.user_turns) return exhaust();
    add_observation(prompts_.render("format_error", {{"diagnostic", bad.diagnostic}}), false, false, false,
                    std::nullopt);
  }
}

void ExecutorSession::inject_plan(const std::string& revision, const PlannerOutput& reflection) {
  if (trajectory_.aborted) throw PreconditionError("cannot resume an aborted trajectory");
  if (!trajectory_.final_answer) throw PreconditionError("cannot inject a plan before a final answer");
  if (trajectory_.count(StepKind::PlanInjection) > 0) throw PreconditionError("a plan was already injected");
  Step step;
  step.kind = StepKind::PlanInjection;
  step.source = Source::Planner;
  step.text = revision;
  step.turn = trajectory_.assistant_turns;
  trajectory_.steps.push_back(std::move(step));
  trajectory_.segments.push_back(model_segment(Source::Planner, reflection.text, reflection.tokens));
  messages_.push_back({gateway::Role::User, prompts_.render("plan_injection", {{"plan", revision}}), std::nullopt});
  trajectory_.final_answer.reset();
  trajectory_.exhausted = false;
}

}  // namespace memplan::agent
