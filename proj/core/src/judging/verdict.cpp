#include "memplan/judging/verdict.hpp"

#include "memplan/common/text.hpp"

namespace memplan::judging {

nlohmann::json CorrectnessVerdict::to_json() const {
  return {{"correct", correct},     {"rationale", rationale}, {"raw", raw},         {"parse_failure", parse_failure},
          {"exact_match", exact_match}, {"method", method},   {"details", details}};
}

CorrectnessVerdict CorrectnessVerdict::from_json(const nlohmann::json& j) {
  CorrectnessVerdict v;
  v.correct = j.at("correct").get<bool>();
  v.rationale = j.at("rationale").get<std::string>();
  v.raw = j.at("raw").get<std::string>();
  v.parse_failure = j.at("parse_failure").get<bool>();
  v.exact_match = j.at("exact_match").get<bool>();
  v.method = j.at("method").get<std::string>();
  v.details = j.at("details");
  return v;
}

namespace {

std::string remove_think(std::string_view s, bool& unclosed) {
  std::string out;
  unclosed = false;
  std::size_t i = 0;
  while (i < s.size()) {
    auto open = s.find("<think>", i);
    if (open == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, open - i));
    auto close = s.find("</think>", open);
    if (close == std::string_view::npos) {
      unclosed = true;
      break;
    }
    i = close + 8;
  }
  return out;
}

std::string strip_decoration(std::string s) {
  auto is_deco = [](char c) {
    return c == '*' || c == '.' || c == '"' || c == '\'' || c == '`' || c == '!' || c == ':' || c == ' ' ||
           c == '\t' || c == '[' || c == ']';
  };
  while (!s.empty() && is_deco(s.front())) s.erase(0, 1);
  while (!s.empty() && is_deco(s.back())) s.pop_back();
  return s;
}

}  // namespace

CorrectnessVerdict parse_verdict(std::string_view raw) {
  CorrectnessVerdict v;
  v.raw = std::string(raw);
  v.method = "judge";
  bool unclosed = false;
  auto body = remove_think(raw, unclosed);
  std::vector<std::string> lines;
  for (auto& l : text::split_lines(body)) {
    if (!text::trim(l).empty()) lines.emplace_back(text::trim(l));
  }
  if (!unclosed && !lines.empty()) {
    auto last = text::to_lower(lines.back());
    std::string tag;
    if (text::extract_tag(last, "verdict", tag)) last = tag;
    last = strip_decoration(last);
    for (const char* label : {"verdict", "judgment", "judgement", "answer"}) {
      if (last.rfind(label, 0) == 0) last = strip_decoration(last.substr(std::string_view(label).size()));
    }
    if (last == "correct" || last == "incorrect") {
      v.correct = last == "correct";
      lines.pop_back();
      for (const auto& l : lines) v.rationale += (v.rationale.empty() ? "" : "\n") + l;
      return v;
    }
  }
  v.correct = false;
  v.parse_failure = true;
  v.rationale = kParseFailure;
  return v;
}

}  // namespace memplan::judging
