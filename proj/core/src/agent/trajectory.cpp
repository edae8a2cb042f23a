#include "memplan/agent/trajectory.hpp"

#include <algorithm>
#include <array>

#include "memplan/common/error.hpp"

namespace memplan::agent {

namespace {

constexpr std::array<std::string_view, 6> kStepNames{"thought",        "tool_call", "observation",
                                                     "plan_injection", "answer",    "malformed"};
constexpr std::array<std::string_view, 3> kSourceNames{"executor", "planner", "tool"};

nlohmann::json tokens_json(const std::vector<gateway::TokenLogprob>& tokens) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tokens) arr.push_back({t.token, t.logprob});
  return arr;
}

std::vector<gateway::TokenLogprob> tokens_from(const nlohmann::json& j) {
  std::vector<gateway::TokenLogprob> out;
  for (const auto& t : j) out.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
  return out;
}

}  // namespace

std::string_view to_string(StepKind k) { return kStepNames[static_cast<std::size_t>(k)]; }

StepKind step_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStepNames.size(); ++i) {
    if (kStepNames[i] == s) return static_cast<StepKind>(i);
  }
  throw FormatError("unknown step kind: " + std::string(s));
}

std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

Source source_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == s) return static_cast<Source>(i);
  }
  throw FormatError("unknown token source: " + std::string(s));
}

nlohmann::json Step::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}, {"source", to_string(source)}, {"text", text}, {"turn", turn}};
  if (tool) j["tool"] = tools::to_string(*tool);
  if (tool_error) j["tool_error"] = true;
  if (truncated) j["truncated"] = true;
  if (cache_miss) j["cache_miss"] = true;
  return j;
}

Step Step::from_json(const nlohmann::json& j) {
  Step s;
  s.kind = step_kind_from_string(j.at("kind").get<std::string>());
  s.source = source_from_string(j.at("source").get<std::string>());
  s.text = j.at("text").get<std::string>();
  s.turn = j.at("turn").get<int>();
  if (j.contains("tool")) {
    auto t = tools::tool_from_string(j["tool"].get<std::string>());
    if (!t) throw FormatError("unknown tool in step record");
    s.tool = *t;
  }
  s.tool_error = j.value("tool_error", false);
  s.truncated = j.value("truncated", false);
  s.cache_miss = j.value("cache_miss", false);
  return s;
}

nlohmann::json Segment::to_json() const {
  return {{"source", to_string(source)}, {"text", text}, {"tokens", tokens_json(tokens)}, {"has_logprobs", has_logprobs}};
}

Segment Segment::from_json(const nlohmann::json& j) {
  Segment s;
  s.source = source_from_string(j.at("source").get<std::string>());
  s.text = j.at("text").get<std::string>();
  s.tokens = tokens_from(j.at("tokens"));
  s.has_logprobs = j.at("has_logprobs").get<bool>();
  return s;
}

bool Trajectory::has_answer_step() const { return count(StepKind::Answer) > 0; }

std::size_t Trajectory::count(StepKind kind) const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [&](const Step& s) { return s.kind == kind; }));
}

Trajectory Trajectory::until_intermediate() const {
  if (!intermediate_step) return *this;
  Trajectory t;
  t.steps.assign(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(*intermediate_step + 1));
  t.intermediate_answer = intermediate_answer;
  t.final_answer = intermediate_answer;
  t.intermediate_step = intermediate_step;
  t.assistant_turns = t.steps.back().turn;
  for (const auto& s : t.steps) {
    if (s.kind == StepKind::Observation) ++t.user_turns;
  }
  return t;
}

std::string Trajectory::transcript() const {
  std::string out;
  for (const auto& s : steps) {
    if (!out.empty()) out += "\n";
    switch (s.kind) {
      case StepKind::Thought: out += "[think] "; break;
      case StepKind::ToolCall: out += "[tool_call] "; break;
      case StepKind::Observation: out += "[observation] "; break;
      case StepKind::PlanInjection: out += "[revised plan] "; break;
      case StepKind::Answer: out += "[answer] "; break;
      case StepKind::Malformed: out += "[malformed] "; break;
    }
    out += s.text;
  }
  if (exhausted) out += (out.empty() ? "" : "\n") + std::string("[stopped: turn limit reached]");
  if (aborted) out += (out.empty() ? "" : "\n") + std::string("[stopped: ") + abort_reason.value_or("aborted") + "]";
  return out;
}

nlohmann::json Trajectory::to_json() const {
  auto steps_j = nlohmann::json::array();
  for (const auto& s : steps) steps_j.push_back(s.to_json());
  auto seg_j = nlohmann::json::array();
  for (const auto& s : segments) seg_j.push_back(s.to_json());
  nlohmann::json j{{"steps", steps_j},
                   {"segments", seg_j},
                   {"assistant_turns", assistant_turns},
                   {"user_turns", user_turns},
                   {"exhausted", exhausted},
                   {"aborted", aborted}};
  j["intermediate_answer"] = intermediate_answer ? nlohmann::json(*intermediate_answer) : nlohmann::json(nullptr);
  j["final_answer"] = final_answer ? nlohmann::json(*final_answer) : nlohmann::json(nullptr);
  j["intermediate_step"] = intermediate_step ? nlohmann::json(*intermediate_step) : nlohmann::json(nullptr);
  j["abort_reason"] = abort_reason ? nlohmann::json(*abort_reason) : nlohmann::json(nullptr);
  return j;
}

Trajectory Trajectory::from_json(const nlohmann::json& j) {
  Trajectory t;
  for (const auto& s : j.at("steps")) t.steps.push_back(Step::from_json(s));
  for (const auto& s : j.at("segments")) t.segments.push_back(Segment::from_json(s));
  t.assistant_turns = j.at("assistant_turns").get<int>();
  t.user_turns = j.at("user_turns").get<int>();
  t.exhausted = j.at("exhausted").get<bool>();
  t.aborted = j.at("aborted").get<bool>();
  if (!j.at("intermediate_answer").is_null()) t.intermediate_answer = j["intermediate_answer"].get<std::string>();
  if (!j.at("final_answer").is_null()) t.final_answer = j["final_answer"].get<std::string>();
  if (!j.at("intermediate_step").is_null()) t.intermediate_step = j["intermediate_step"].get<std::size_t>();
  if (!j.at("abort_reason").is_null()) t.abort_reason = j["abort_reason"].get<std::string>();
  return t;
}

}  // namespace memplan::agent
