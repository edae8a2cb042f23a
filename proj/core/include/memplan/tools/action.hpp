#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace memplan::tools {

enum class ToolName { TextSearch, ImageSearch };

std::string_view to_string(ToolName name);
std::optional<ToolName> tool_from_string(std::string_view s);

struct ToolCall {
  ToolName name = ToolName::TextSearch;
  std::string argument;  // query text, or an image reference
  std::string raw;       // the <tool_call> element as emitted
};

struct FinalAnswer {
  std::string text;
};

struct Malformed {
  std::string diagnostic;
};

using Action = std::variant<ToolCall, FinalAnswer, Malformed>;

struct ParsedAction {
  std::string thought;
  Action action;

  bool is_tool_call() const { return std::holds_alternative<ToolCall>(action); }
  bool is_answer() const { return std::holds_alternative<FinalAnswer>(action); }
  bool is_malformed() const { return std::holds_alternative<Malformed>(action); }
};

// Accepts `<think>...</think>` followed by exactly one `<tool_call>{json}</tool_call>`
// or `<answer>...</answer>`, surrounded only by whitespace. Total: every
// input yields one of the three variants.
ParsedAction parse_action(std::string_view model_output);

// Canonical `<tool_call>` element for a call.
std::string format_tool_call(const ToolCall& call);

}  // namespace memplan::tools
