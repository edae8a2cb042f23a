#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace memplan::judging {

struct CorrectnessVerdict {
  bool correct = false;
  std::string rationale;
  std::string raw;
  bool parse_failure = false;
  bool exact_match = false;
  std::string method;  // "exact", "judge", "peer_review", "none"
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
  static CorrectnessVerdict from_json(const nlohmann::json& j);
};

inline constexpr const char* kParseFailure = "verdict parse failure";

// Reads the last non-empty line after removing think blocks; it must be
// "correct" or "incorrect" (case-insensitive, optional "verdict:" label and
// surrounding punctuation). Anything else is incorrect with the parse
// failure marker.
CorrectnessVerdict parse_verdict(std::string_view raw);

}  // namespace memplan::judging
