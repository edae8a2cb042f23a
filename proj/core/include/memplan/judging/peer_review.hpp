#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/agent/prompts.hpp"
#include "memplan/agent/trajectory.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/judging/verdict.hpp"

namespace memplan::judging {

enum class ReviewerRole { Logic, Credibility, Validity };
enum class Severity { Minor, Major, Fatal };

std::string_view to_string(ReviewerRole r);
ReviewerRole reviewer_role_from_string(std::string_view s);
std::string_view to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view s);

inline constexpr std::array<ReviewerRole, 3> kReviewerRoles{ReviewerRole::Logic, ReviewerRole::Credibility,
                                                           ReviewerRole::Validity};

struct Finding {
  Severity severity = Severity::Minor;
  std::string evidence;
  std::string note;
};

struct ReviewerReport {
  ReviewerRole role = ReviewerRole::Logic;
  double score = 0.0;
  std::vector<Finding> findings;
  std::string raw;
  bool parse_failure = false;

  bool has_fatal() const;
  nlohmann::json to_json() const;
  static ReviewerReport from_json(const nlohmann::json& j);
};

struct ACDecision {
  bool accept = false;
  std::string rationale;
  std::vector<std::string> cited;
  bool short_circuit = false;
  bool parse_failure = false;
  std::string raw;

  nlohmann::json to_json() const;
  static ACDecision from_json(const nlohmann::json& j);
};

// Strict reviewer payload parser. Returns nullopt when the first JSON object
// in `raw` is missing, has a score outside [0,1], an unknown severity, or a
// fatal finding without evidence.
std::optional<ReviewerReport> parse_report(ReviewerRole role, std::string_view raw);

// Score-0 report with one fatal finding quoting the start of the raw output.
ReviewerReport parse_failure_report(ReviewerRole role, const std::string& raw);

std::string gateway_agent(ReviewerRole role);
inline constexpr const char* kAreaChairAgent = "area_chair";

class PeerReview {
 public:
  PeerReview(gateway::Gateway& gateway, const agent::PromptLibrary& prompts, bool parallel = false);

  // One reviewer. A malformed reply is retried once, then replaced by the
  // parse-failure report.
  ReviewerReport review(const std::string& question, const agent::Trajectory& trajectory, const std::string& answer,
                        ReviewerRole role) const;

  // Requires exactly one report per role. Rejects without a call when the
  // credibility reviewer reports a fatal finding or any report failed to
  // parse; otherwise asks the area chair over the structured reports.
  ACDecision area_chair(const std::string& question, std::span<const ReviewerReport> reports) const;

  struct Outcome {
    std::vector<ReviewerReport> reports;
    ACDecision decision;
    CorrectnessVerdict verdict;
  };

  // Three reviews then the area chair; accept maps to correct.
  Outcome unsupervised_verdict(const std::string& question, const agent::Trajectory& trajectory,
                               const std::string& answer) const;

 private:
  gateway::Gateway& gateway_;
  const agent::PromptLibrary& prompts_;
  bool parallel_;
};

// The decision the area chair must take regardless of its own output, if any.
std::optional<ACDecision> forced_decision(std::span<const ReviewerReport> reports);

}  // namespace memplan::judging
