#include "memplan/tools/action.hpp"

#include <nlohmann/json.hpp>

#include "memplan/common/text.hpp"

namespace memplan::tools {

std::string_view to_string(ToolName name) {
  return name == ToolName::TextSearch ? "text_search" : "image_search";
}

std::optional<ToolName> tool_from_string(std::string_view s) {
  if (s == "text_search") return ToolName::TextSearch;
  if (s == "image_search") return ToolName::ImageSearch;
  return std::nullopt;
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kCallOpen = "<tool_call>";
constexpr std::string_view kCallClose = "</tool_call>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

ParsedAction malformed(std::string thought, std::string why) { return {std::move(thought), Malformed{std::move(why)}}; }

Action parse_tool_body(std::string_view body, std::string raw) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return Malformed{"tool_call body is not a JSON object"};
  if (!j.contains("name") || !j["name"].is_string()) return Malformed{"tool_call has no string \"name\""};
  auto name = tool_from_string(j["name"].get<std::string>());
  if (!name) return Malformed{"unknown tool: " + j["name"].get<std::string>()};
  if (!j.contains("arguments") || !j["arguments"].is_object()) return Malformed{"tool_call has no \"arguments\" object"};
  const auto& args = j["arguments"];
  const char* key = *name == ToolName::TextSearch ? "query" : "image";
  if (!args.contains(key) || !args[key].is_string()) {
    return Malformed{std::string("tool_call arguments need a string \"") + key + "\""};
  }
  auto value = std::string(text::trim(args[key].get<std::string>()));
  if (value.empty()) return Malformed{std::string("empty \"") + key + "\" argument"};
  return ToolCall{*name, std::move(value), std::move(raw)};
}

}  // namespace

ParsedAction parse_action(std::string_view model_output) {
  auto s = text::trim(model_output);
  if (s.substr(0, kThinkOpen.size()) != kThinkOpen) return malformed({}, "output must start with <think>");
  auto think_end = s.find(kThinkClose);
  if (think_end == std::string_view::npos) return malformed({}, "unclosed <think>");
  std::string thought(text::trim(s.substr(kThinkOpen.size(), think_end - kThinkOpen.size())));
  auto rest = text::trim(s.substr(think_end + kThinkClose.size()));

  if (rest.substr(0, kCallOpen.size()) == kCallOpen) {
    auto close = rest.find(kCallClose);
    if (close == std::string_view::npos) return malformed(std::move(thought), "unclosed <tool_call>");
    if (!text::trim(rest.substr(close + kCallClose.size())).empty()) {
      return malformed(std::move(thought), "trailing text after </tool_call>");
    }
    auto body = rest.substr(kCallOpen.size(), close - kCallOpen.size());
    return {std::move(thought), parse_tool_body(body, std::string(rest.substr(0, close + kCallClose.size())))};
  }
  if (rest.substr(0, kAnswerOpen.size()) == kAnswerOpen) {
    auto close = rest.find(kAnswerClose);
    if (close == std::string_view::npos) return malformed(std::move(thought), "unclosed <answer>");
    if (!text::trim(rest.substr(close + kAnswerClose.size())).empty()) {
      return malformed(std::move(thought), "trailing text after </answer>");
    }
    std::string answer(text::trim(rest.substr(kAnswerOpen.size(), close - kAnswerOpen.size())));
    if (answer.empty()) return malformed(std::move(thought), "empty <answer>");
    return {std::move(thought), FinalAnswer{std::move(answer)}};
  }
  return malformed(std::move(thought), "expected <tool_call> or <answer> after </think>");
}

std::string format_tool_call(const ToolCall& call) {
  const char* key = call.name == ToolName::TextSearch ? "query" : "image";
  nlohmann::json body{{"name", std::string(to_string(call.name))}, {"arguments", {{key, call.argument}}}};
  return std::string(kCallOpen) + body.dump() + std::string(kCallClose);
}

}  // namespace memplan::tools
