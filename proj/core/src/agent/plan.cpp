#include "memplan/agent/plan.hpp"

#include <cctype>

#include "memplan/common/text.hpp"

namespace memplan::agent {

std::string render_steps(const std::vector<std::string>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += "\n";
    out += std::to_string(i + 1) + ". " + steps[i];
  }
  return out;
}

std::vector<std::string> parse_plan_steps(const std::string& body) {
  std::vector<std::string> steps;
  for (const auto& raw : text::split_lines(body)) {
    auto line = text::trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
      line = text::trim(line.substr(i + 1));
    } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
      line = text::trim(line.substr(1));
    }
    if (!line.empty()) steps.emplace_back(line);
  }
  return steps;
}

std::string Plan::render() const { return render_steps(steps); }

std::string Plan::render_revision() const { return revision ? render_steps(*revision) : std::string(); }

namespace {

nlohmann::json output_json(const PlannerOutput& o) {
  nlohmann::json toks = nlohmann::json::array();
  for (const auto& t : o.tokens) toks.push_back({t.token, t.logprob});
  return {{"text", o.text}, {"tokens", toks}};
}

PlannerOutput output_from(const nlohmann::json& j) {
  PlannerOutput o;
  o.text = j.at("text").get<std::string>();
  for (const auto& t : j.at("tokens")) o.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
  return o;
}

}  // namespace

nlohmann::json Plan::to_json() const {
  nlohmann::json j{{"thought", thought},
                   {"steps", steps},
                   {"reflection_triggered", reflection_triggered},
                   {"reflection_consulted", reflection_consulted},
                   {"fallback", fallback},
                   {"format_ok", format_ok},
                   {"output", output_json(output)}};
  j["revision"] = revision ? nlohmann::json(*revision) : nlohmann::json(nullptr);
  j["reflection"] = reflection ? output_json(*reflection) : nlohmann::json(nullptr);
  return j;
}

Plan Plan::from_json(const nlohmann::json& j) {
  Plan p;
  p.thought = j.at("thought").get<std::string>();
  p.steps = j.at("steps").get<std::vector<std::string>>();
  p.reflection_triggered = j.at("reflection_triggered").get<bool>();
  p.reflection_consulted = j.at("reflection_consulted").get<bool>();
  p.fallback = j.at("fallback").get<bool>();
  p.format_ok = j.at("format_ok").get<bool>();
  p.output = output_from(j.at("output"));
  if (!j.at("revision").is_null()) p.revision = j.at("revision").get<std::vector<std::string>>();
  if (!j.at("reflection").is_null()) p.reflection = output_from(j.at("reflection"));
  return p;
}

}  // namespace memplan::agent
