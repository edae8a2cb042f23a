#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/gateway/chat.hpp"

namespace memplan::agent {

// One planner completion as sent back by the gateway.
struct PlannerOutput {
  std::string text;
  std::vector<gateway::TokenLogprob> tokens;
};

struct Plan {
  std::string thought;
  std::vector<std::string> steps;
  std::optional<std::vector<std::string>> revision;
  bool reflection_triggered = false;
  bool reflection_consulted = false;
  // The planner fell back to a single "answer directly" step.
  bool fallback = false;
  // Every planner completion in this episode matched its grammar.
  bool format_ok = true;

  PlannerOutput output;                     // accepted (or last) planning completion
  std::optional<PlannerOutput> reflection;  // the reflection completion, if consulted

  // Numbered rendering, one step per line.
  std::string render() const;
  std::string render_revision() const;

  nlohmann::json to_json() const;
  static Plan from_json(const nlohmann::json& j);
};

std::string render_steps(const std::vector<std::string>& steps);

// Parses `<plan>` content into steps, dropping list markers and blank lines.
std::vector<std::string> parse_plan_steps(const std::string& body);

}  // namespace memplan::agent
