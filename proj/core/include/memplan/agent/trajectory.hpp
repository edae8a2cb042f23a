#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/gateway/chat.hpp"
#include "memplan/tools/action.hpp"

namespace memplan::agent {

enum class StepKind { Thought, ToolCall, Observation, PlanInjection, Answer, Malformed };

// Who produced a piece of text. Token masks are derived from this alone.
enum class Source { Executor, Planner, Tool };

std::string_view to_string(StepKind k);
StepKind step_kind_from_string(std::string_view s);
std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct Step {
  StepKind kind = StepKind::Thought;
  Source source = Source::Executor;
  std::string text;
  std::optional<tools::ToolName> tool;
  bool tool_error = false;
  bool truncated = false;
  bool cache_miss = false;
  int turn = 0;  // assistant turn that produced or triggered the step

  nlohmann::json to_json() const;
  static Step from_json(const nlohmann::json& j);
};

// A contiguous stretch of text from one source. Model-produced segments
// carry backend token records; others are filled with proxy tokens.
struct Segment {
  Source source = Source::Executor;
  std::string text;
  std::vector<gateway::TokenLogprob> tokens;
  bool has_logprobs = false;

  nlohmann::json to_json() const;
  static Segment from_json(const nlohmann::json& j);
};

inline constexpr const char* kUnableToDetermine = "unable to determine";

struct Trajectory {
  std::vector<Step> steps;
  std::vector<Segment> segments;
  std::optional<std::string> intermediate_answer;
  std::optional<std::string> final_answer;
  std::optional<std::size_t> intermediate_step;  // index of the first Answer step
  int assistant_turns = 0;
  int user_turns = 0;
  bool exhausted = false;
  bool aborted = false;
  std::optional<std::string> abort_reason;

  std::size_t length() const { return steps.size(); }
  bool has_answer_step() const;
  std::size_t count(StepKind kind) const;

  // Steps up to and including the first answer.
  Trajectory until_intermediate() const;

  // Plain-text transcript used by the reviewer, compression and reflection
  // prompts.
  std::string transcript() const;

  nlohmann::json to_json() const;
  static Trajectory from_json(const nlohmann::json& j);
};

}  // namespace memplan::agent
