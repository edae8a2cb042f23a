#include "memplan/judging/peer_review.hpp"

#include <future>

#include "memplan/common/error.hpp"
#include "memplan/common/text.hpp"

namespace memplan::judging {

namespace {

constexpr std::size_t kEvidencePrefix = 200;

}  // namespace

std::string_view to_string(ReviewerRole r) {
  switch (r) {
    case ReviewerRole::Logic: return "logic";
    case ReviewerRole::Credibility: return "credibility";
    case ReviewerRole::Validity: return "validity";
  }
  return "logic";
}

ReviewerRole reviewer_role_from_string(std::string_view s) {
  for (auto r : kReviewerRoles) {
    if (to_string(r) == s) return r;
  }
  throw FormatError("unknown reviewer role: " + std::string(s));
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Minor: return "minor";
    case Severity::Major: return "major";
    case Severity::Fatal: return "fatal";
  }
  return "minor";
}

std::optional<Severity> severity_from_string(std::string_view s) {
  auto lower = text::to_lower(text::trim(s));
  if (lower == "minor") return Severity::Minor;
  if (lower == "major") return Severity::Major;
  if (lower == "fatal") return Severity::Fatal;
  return std::nullopt;
}

std::string gateway_agent(ReviewerRole role) { return "reviewer_" + std::string(to_string(role)); }

bool ReviewerReport::has_fatal() const {
  for (const auto& f : findings) {
    if (f.severity == Severity::Fatal) return true;
  }
  return false;
}

nlohmann::json ReviewerReport::to_json() const {
  auto fs = nlohmann::json::array();
  for (const auto& f : findings) {
    fs.push_back({{"severity", to_string(f.severity)}, {"evidence", f.evidence}, {"note", f.note}});
  }
  return {{"role", to_string(role)}, {"score", score}, {"findings", fs}, {"raw", raw}, {"parse_failure", parse_failure}};
}

ReviewerReport ReviewerReport::from_json(const nlohmann::json& j) {
  ReviewerReport r;
  r.role = reviewer_role_from_string(j.at("role").get<std::string>());
  r.score = j.at("score").get<double>();
  for (const auto& f : j.at("findings")) {
    auto sev = severity_from_string(f.at("severity").get<std::string>());
    if (!sev) throw FormatError("unknown severity in stored report");
    r.findings.push_back({*sev, f.at("evidence").get<std::string>(), f.at("note").get<std::string>()});
  }
  r.raw = j.at("raw").get<std::string>();
  r.parse_failure = j.at("parse_failure").get<bool>();
  return r;
}

nlohmann::json ACDecision::to_json() const {
  return {{"accept", accept},   {"rationale", rationale},         {"cited", cited},
          {"short_circuit", short_circuit}, {"parse_failure", parse_failure}, {"raw", raw}};
}

ACDecision ACDecision::from_json(const nlohmann::json& j) {
  ACDecision d;
  d.accept = j.at("accept").get<bool>();
  d.rationale = j.at("rationale").get<std::string>();
  d.cited = j.at("cited").get<std::vector<std::string>>();
  d.short_circuit = j.at("short_circuit").get<bool>();
  d.parse_failure = j.at("parse_failure").get<bool>();
  d.raw = j.at("raw").get<std::string>();
  return d;
}

std::optional<ReviewerReport> parse_report(ReviewerRole role, std::string_view raw) {
  std::string obj;
  if (!text::extract_json_object(raw, obj)) return std::nullopt;
  auto j = nlohmann::json::parse(obj, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (!j.contains("score") || !j["score"].is_number()) return std::nullopt;
  double score = j["score"].get<double>();
  if (!(score >= 0.0 && score <= 1.0)) return std::nullopt;
  ReviewerReport r;
  r.role = role;
  r.score = score;
  r.raw = std::string(raw);
  if (!j.contains("findings") || !j["findings"].is_array()) return std::nullopt;
  for (const auto& f : j["findings"]) {
    if (!f.is_object() || !f.contains("severity") || !f["severity"].is_string()) return std::nullopt;
    auto sev = severity_from_string(f["severity"].get<std::string>());
    if (!sev) return std::nullopt;
    Finding finding;
    finding.severity = *sev;
    if (f.contains("evidence")) {
      if (!f["evidence"].is_string()) return std::nullopt;
      finding.evidence = f["evidence"].get<std::string>();
    }
    if (f.contains("note")) {
      if (!f["note"].is_string()) return std::nullopt;
      finding.note = f["note"].get<std::string>();
    }
    if (finding.severity == Severity::Fatal && text::trim(finding.evidence).empty()) return std::nullopt;
    r.findings.push_back(std::move(finding));
  }
  return r;
}

ReviewerReport parse_failure_report(ReviewerRole role, const std::string& raw) {
  ReviewerReport r;
  r.role = role;
  r.score = 0.0;
  r.raw = raw;
  r.parse_failure = true;
  auto evidence = raw.substr(0, kEvidencePrefix);
  if (text::trim(evidence).empty()) evidence = "(empty reviewer output)";
  r.findings.push_back({Severity::Fatal, std::move(evidence), kParseFailure});
  return r;
}

std::optional<ACDecision> forced_decision(std::span<const ReviewerReport> reports) {
  if (reports.size() != kReviewerRoles.size()) throw PreconditionError("area chair needs exactly three reports");
  for (auto role : kReviewerRoles) {
    std::size_t n = 0;
    for (const auto& r : reports) n += r.role == role ? 1 : 0;
    if (n != 1) throw PreconditionError("area chair needs one report per reviewer role");
  }
  for (const auto& r : reports) {
    if (r.role != ReviewerRole::Credibility || !r.has_fatal()) continue;
    ACDecision d;
    d.short_circuit = true;
    d.rationale = "rejected: the credibility review reports a fatal factual flaw";
    for (std::size_t i = 0; i < r.findings.size(); ++i) {
      if (r.findings[i].severity == Severity::Fatal) d.cited.push_back("credibility#" + std::to_string(i));
    }
    return d;
  }
  for (const auto& r : reports) {
    if (!r.parse_failure) continue;
    ACDecision d;
    d.short_circuit = true;
    d.rationale = "rejected: the " + std::string(to_string(r.role)) + " review could not be parsed";
    d.cited.push_back(std::string(to_string(r.role)) + "#0");
    return d;
  }
  return std::nullopt;
}

PeerReview::PeerReview(gateway::Gateway& gateway, const agent::PromptLibrary& prompts, bool parallel)
    : gateway_(gateway), prompts_(prompts), parallel_(parallel) {}

ReviewerReport PeerReview::review(const std::string& question, const agent::Trajectory& trajectory,
                                  const std::string& answer, ReviewerRole role) const {
  if (!trajectory.final_answer) throw PreconditionError("review needs a trajectory with a final answer");
  auto prompt = prompts_.render("reviewer_" + std::string(to_string(role)),
                                {{"question", question}, {"trajectory", trajectory.transcript()}, {"answer", answer}});
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    gateway::ChatRequest req;
    req.agent = gateway_agent(role);
    req.messages.push_back(
        {gateway::Role::User, attempt == 0 ? prompt : prompt + prompts_.get("reviewer_reminder"), std::nullopt});
    last = gateway_.complete(std::move(req)).text;
    if (auto report = parse_report(role, last)) return *report;
  }
  return parse_failure_report(role, last);
}

ACDecision PeerReview::area_chair(const std::string& question, std::span<const ReviewerReport> reports) const {
  if (auto forced = forced_decision(reports)) return *forced;

  std::string rendered;
  for (const auto& r : reports) {
    auto j = r.to_json();
    j.erase("raw");
    j.erase("parse_failure");
    rendered += (rendered.empty() ? "" : "\n") + j.dump();
  }
  gateway::ChatRequest req;
  req.agent = kAreaChairAgent;
  req.messages.push_back(
      {gateway::Role::User, prompts_.render("area_chair", {{"question", question}, {"reports", rendered}}), std::nullopt});
  ACDecision d;
  d.raw = gateway_.complete(std::move(req)).text;

  std::string obj;
  nlohmann::json j = nlohmann::json::value_t::discarded;
  if (text::extract_json_object(d.raw, obj)) j = nlohmann::json::parse(obj, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("decision") || !j["decision"].is_string()) {
    d.parse_failure = true;
    d.rationale = "rejected: area chair output could not be parsed";
    return d;
  }
  auto decision = text::to_lower(text::trim(j["decision"].get<std::string>()));
  if (decision != "accept" && decision != "reject") {
    d.parse_failure = true;
    d.rationale = "rejected: area chair gave no accept/reject decision";
    return d;
  }
  d.accept = decision == "accept";
  if (j.contains("rationale") && j["rationale"].is_string()) d.rationale = j["rationale"].get<std::string>();
  if (j.contains("cited") && j["cited"].is_array()) {
    for (const auto& c : j["cited"]) {
      if (c.is_string()) d.cited.push_back(c.get<std::string>());
    }
  }
  return d;
}

PeerReview::Outcome PeerReview::unsupervised_verdict(const std::string& question, const agent::Trajectory& trajectory,
                                                     const std::string& answer) const {
  Outcome out;
  if (parallel_) {
    std::vector<std::future<ReviewerReport>> futures;
    for (auto role : kReviewerRoles) {
      futures.push_back(std::async(std::launch::async, [&, role] { return review(question, trajectory, answer, role); }));
    }
    for (auto& f : futures) out.reports.push_back(f.get());
  } else {
    for (auto role : kReviewerRoles) out.reports.push_back(review(question, trajectory, answer, role));
  }
  out.decision = area_chair(question, out.reports);
  out.verdict.correct = out.decision.accept;
  out.verdict.method = "peer_review";
  out.verdict.rationale = out.decision.rationale;
  out.verdict.raw = out.decision.raw;
  out.verdict.parse_failure = out.decision.parse_failure;
  auto reports = nlohmann::json::array();
  for (const auto& r : out.reports) reports.push_back(r.to_json());
  out.verdict.details = {{"reports", reports}, {"decision", out.decision.to_json()}};
  return out;
}

}  // namespace memplan::judging
