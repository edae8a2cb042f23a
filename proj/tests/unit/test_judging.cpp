#include <gtest/gtest.h>

#include <random>

#include "memplan/common/error.hpp"
#include "memplan/judging/judge.hpp"
#include "support.hpp"

using namespace memplan;
using namespace memplan::judging;
using testkit::World;

namespace {

agent::Trajectory answered(const std::string& answer) {
  agent::Trajectory t;
  agent::Step s;
  s.kind = agent::StepKind::Answer;
  s.text = answer;
  t.steps.push_back(s);
  t.final_answer = answer;
  t.intermediate_answer = answer;
  return t;
}

ReviewerReport report(ReviewerRole role, std::vector<Severity> severities, bool parse_failure = false) {
  ReviewerReport r;
  r.role = role;
  r.score = 0.5;
  for (auto s : severities) r.findings.push_back({s, "quoted text", "note"});
  r.parse_failure = parse_failure;
  return r;
}

void script_reviewers(World& w, const std::string& logic, const std::string& cred, const std::string& validity) {
  w.on(gateway_agent(ReviewerRole::Logic), {}, {logic});
  w.on(gateway_agent(ReviewerRole::Credibility), {}, {cred});
  w.on(gateway_agent(ReviewerRole::Validity), {}, {validity});
}

std::size_t reviewer_calls(World& w) {
  std::size_t n = 0;
  for (auto r : kReviewerRoles) n += w.recorder().count(gateway_agent(r));
  return n;
}

}  // namespace

TEST(Verdict, Parsing) {
  EXPECT_TRUE(parse_verdict("correct").correct);
  EXPECT_TRUE(parse_verdict("<think>hmm, incorrect?</think>\nVerdict: Correct.").correct);
  EXPECT_FALSE(parse_verdict("Incorrect").correct);
  EXPECT_FALSE(parse_verdict("Incorrect").parse_failure);
  EXPECT_TRUE(parse_verdict("**correct**\n\n").correct);
  auto bad = parse_verdict("probably right");
  EXPECT_FALSE(bad.correct);
  EXPECT_TRUE(bad.parse_failure);
  EXPECT_EQ(bad.rationale, kParseFailure);
  EXPECT_TRUE(parse_verdict("").parse_failure);
  auto v = parse_verdict("correct");
  EXPECT_EQ(CorrectnessVerdict::from_json(v.to_json()).to_json(), v.to_json());
}

TEST(GoldJudgeTest, ExactMatchSkipsCall) {
  World w;
  w.on(kJudgeAgent, {}, {"correct"});
  agent::Task t{"t", "q?", std::nullopt, std::string("Ada Marsh"), std::nullopt};
  auto exact = w.gold_judge().evaluate(t, answered("Ada Marsh"), "Ada Marsh");
  EXPECT_TRUE(exact.exact_match);
  EXPECT_EQ(w.recorder().count(kJudgeAgent), 0u);
  auto judged = w.gold_judge().evaluate(t, answered("ada marsh"), "ada marsh");
  EXPECT_TRUE(judged.correct);
  EXPECT_EQ(judged.method, "judge");
  EXPECT_EQ(w.recorder().count(kJudgeAgent), 1u);
  auto none = w.gold_judge().evaluate(t, answered(agent::kUnableToDetermine), agent::kUnableToDetermine);
  EXPECT_FALSE(none.correct);
  EXPECT_EQ(w.recorder().count(kJudgeAgent), 1u);
  t.gold.reset();
  EXPECT_THROW(w.gold_judge().evaluate(t, answered("x"), "x"), PreconditionError);
}

TEST(Reports, StrictParsing) {
  auto ok = parse_report(ReviewerRole::Logic, "prefix {\"score\": 0.75, \"findings\": [{\"severity\": \"Major\", "
                                              "\"evidence\": \"e\", \"note\": \"n\"}]} suffix");
  ASSERT_TRUE(ok.has_value());
  EXPECT_EQ(ok->score, 0.75);
  EXPECT_EQ(ok->findings.at(0).severity, Severity::Major);
  const char* bad[] = {
      "no json",
      "{\"score\": 1.5, \"findings\": []}",
      "{\"score\": -0.1, \"findings\": []}",
      "{\"score\": \"high\", \"findings\": []}",
      "{\"score\": 0.5}",
      "{\"score\": 0.5, \"findings\": [{\"severity\": \"critical\", \"evidence\": \"e\"}]}",
      "{\"score\": 0.5, \"findings\": [{\"severity\": \"fatal\", \"evidence\": \"  \"}]}",
      "{\"score\": 0.5, \"findings\": [{\"evidence\": \"e\"}]}",
  };
  for (const char* s : bad) EXPECT_FALSE(parse_report(ReviewerRole::Logic, s).has_value()) << s;
  auto failure = parse_failure_report(ReviewerRole::Validity, std::string(500, 'x'));
  EXPECT_TRUE(failure.parse_failure);
  EXPECT_TRUE(failure.has_fatal());
  EXPECT_EQ(failure.score, 0.0);
  EXPECT_EQ(failure.findings[0].evidence.size(), 200u);
  EXPECT_EQ(ReviewerReport::from_json(failure.to_json()).to_json(), failure.to_json());
}

TEST(ForcedDecision, FatalCredibilityDominates) {
  std::mt19937_64 rng(8);
  const Severity sev[] = {Severity::Minor, Severity::Major, Severity::Fatal};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ReviewerReport> reports;
    for (auto role : kReviewerRoles) {
      std::vector<Severity> s;
      for (std::size_t i = rng() % 4; i > 0; --i) s.push_back(sev[rng() % 3]);
      reports.push_back(report(role, s, rng() % 8 == 0));
    }
    std::shuffle(reports.begin(), reports.end(), rng);
    auto forced = forced_decision(reports);
    bool cred_fatal = false, any_failure = false;
    for (const auto& r : reports) {
      cred_fatal |= r.role == ReviewerRole::Credibility && r.has_fatal();
      any_failure |= r.parse_failure;
    }
    EXPECT_EQ(forced.has_value(), cred_fatal || any_failure);
    if (forced) {
      EXPECT_FALSE(forced->accept);
      EXPECT_TRUE(forced->short_circuit);
    }
  }
}

TEST(ForcedDecision, RequiresOneReportPerRole) {
  std::vector<ReviewerReport> two{report(ReviewerRole::Logic, {}), report(ReviewerRole::Validity, {})};
  EXPECT_THROW(forced_decision(two), PreconditionError);
  std::vector<ReviewerReport> dup{report(ReviewerRole::Logic, {}), report(ReviewerRole::Logic, {}),
                                  report(ReviewerRole::Validity, {})};
  EXPECT_THROW(forced_decision(dup), PreconditionError);
}

TEST(PeerReviewTest, AcceptPathMakesFourCalls) {
  World w;
  script_reviewers(w, testkit::review_reply(0.9), testkit::review_reply(0.8, {{"minor", "e", "n"}}),
                   testkit::review_reply(0.7));
  w.on(kAreaChairAgent, {}, {testkit::chair_reply(true)});
  agent::Task t{"t", "Who designed the Glass Museum?", std::nullopt, std::string("GOLD-HIDDEN"), std::nullopt};
  auto v = w.peer_judge().evaluate(t, answered("Ada Marsh"), "Ada Marsh");
  EXPECT_TRUE(v.correct);
  EXPECT_EQ(v.method, "peer_review");
  EXPECT_EQ(reviewer_calls(w), 3u);
  EXPECT_EQ(w.recorder().count(kAreaChairAgent), 1u);
  for (const auto& req : w.recorder().requests()) {
    EXPECT_EQ(testkit::joined(req).find("GOLD-HIDDEN"), std::string::npos);
  }
  auto chair = w.recorder().prompts_for(kAreaChairAgent).at(0);
  EXPECT_NE(chair.find("\"role\":\"credibility\""), std::string::npos);
}

TEST(PeerReviewTest, FatalCredibilityRejectsWithoutChair) {
  World w;
  script_reviewers(w, testkit::review_reply(0.9), testkit::review_reply(0.1, {{"fatal", "year 1902", "wrong year"}}),
                   testkit::review_reply(0.9));
  w.on(kAreaChairAgent, {}, {testkit::chair_reply(true)});
  agent::Task t{"t", "q?", std::nullopt, std::nullopt, std::nullopt};
  auto v = w.peer_judge().evaluate(t, answered("x"), "x");
  EXPECT_FALSE(v.correct);
  EXPECT_EQ(reviewer_calls(w), 3u);
  EXPECT_EQ(w.recorder().count(kAreaChairAgent), 0u);
  EXPECT_EQ(v.details.at("decision").at("cited"), nlohmann::json::array({"credibility#0"}));
}

TEST(PeerReviewTest, MalformedReviewerRetriedOnceThenFails) {
  World w;
  script_reviewers(w, "not json", testkit::review_reply(0.9), testkit::review_reply(0.9));
  w.on(kAreaChairAgent, {}, {testkit::chair_reply(true)});
  agent::Task t{"t", "q?", std::nullopt, std::nullopt, std::nullopt};
  auto v = w.peer_judge().evaluate(t, answered("x"), "x");
  EXPECT_FALSE(v.correct);
  EXPECT_EQ(w.recorder().count(gateway_agent(ReviewerRole::Logic)), 2u);
  EXPECT_EQ(w.recorder().count(kAreaChairAgent), 0u);
  auto reminder = w.recorder().prompts_for(gateway_agent(ReviewerRole::Logic)).at(1);
  EXPECT_NE(reminder.size(), w.recorder().prompts_for(gateway_agent(ReviewerRole::Logic)).at(0).size());
}

TEST(PeerReviewTest, ChairParseFailureRejects) {
  World w;
  script_reviewers(w, testkit::review_reply(0.9), testkit::review_reply(0.9), testkit::review_reply(0.9));
  w.on(kAreaChairAgent, {}, {"{\"decision\": \"maybe\"}"});
  agent::Task t{"t", "q?", std::nullopt, std::nullopt, std::nullopt};
  auto v = w.peer_judge().evaluate(t, answered("x"), "x");
  EXPECT_FALSE(v.correct);
  EXPECT_TRUE(v.parse_failure);
}

TEST(PeerReviewTest, ParallelMatchesSequential) {
  auto run = [](bool parallel) {
    World w;
    script_reviewers(w, testkit::review_reply(0.6, {{"major", "a", "b"}}), testkit::review_reply(0.7),
                     testkit::review_reply(0.8));
    w.on(kAreaChairAgent, {}, {testkit::chair_reply(false, "weak support")});
    PeerReview pr(w.gateway(), w.prompts(), parallel);
    auto out = pr.unsupervised_verdict("q?", answered("x"), "x");
    return out.verdict.to_json().dump();
  };
  EXPECT_EQ(run(false), run(true));
  EXPECT_EQ(run(true), run(true));
}

TEST(PeerReviewTest, ReviewNeedsFinalAnswer) {
  World w;
  PeerReview pr(w.gateway(), w.prompts());
  EXPECT_THROW(pr.review("q", agent::Trajectory{}, "x", ReviewerRole::Logic), PreconditionError);
}
