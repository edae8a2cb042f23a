#include <gtest/gtest.h>

#include <random>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/ttl/ttl.hpp"
#include "support.hpp"

using namespace memplan;
using namespace memplan::ttl;
using testkit::World;

namespace {

agent::Task lighthouse(std::string gold = "1874") {
  return {"lh", "In which year was the Harbor Lighthouse completed?", std::nullopt, std::move(gold), std::nullopt};
}

// Four plans; route-a searches then answers right, route-b answers wrong and
// is fixed by a reflection, route-c answers right at once, route-d is wrong.
void script_group(World& w, const std::string& router_reply = "<choice>2</choice>") {
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker, "route-b"}, {testkit::replan_reply({"verify-b the record"})});
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::keep_reply()});
  w.on(agent::kPlannerAgent, {testkit::kPlannerMarker},
       {testkit::plan_reply({"route-a search"}), testkit::plan_reply({"route-b guess"}),
        testkit::plan_reply({"route-c recall"}), testkit::plan_reply({"route-d guess"})});
  w.on_last(agent::kExecutorAgent, {"verify-b"}, {testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {"route-a"},
       {testkit::search_reply("Harbor Lighthouse completed"), testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {"route-b"}, {testkit::answer_reply("1900")});
  w.on(agent::kExecutorAgent, {"route-c"}, {testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {"route-d"}, {testkit::answer_reply("1901")});
  w.on(judging::kJudgeAgent, {}, {"incorrect"});
  w.on(kRouterAgent, {}, {router_reply});
  w.on(agent::kCompressAgent, {"led to a correct answer"}, {testkit::workflow_reply("WF-OK recall the year")});
  w.on(agent::kCompressAgent, {}, {testkit::workflow_reply("WF-BAD guessed")});
}

TtlConfig config() {
  TtlConfig c;
  c.group_size = 4;
  return c;
}

Rollout fake_rollout(std::size_t steps, bool usable) {
  Rollout r;
  r.plan.steps = {"s" + std::to_string(steps)};
  r.trajectory.steps.resize(steps);
  if (usable) r.trajectory.final_answer = "x";
  else r.aborted = true;
  return r;
}

}  // namespace

TEST(Router, ParseChoice) {
  EXPECT_EQ(parse_router_choice("<choice>2</choice>"), 2u);
  EXPECT_EQ(parse_router_choice("<choice> 3 </choice>"), 3u);
  EXPECT_EQ(parse_router_choice("I prefer candidate 1 overall"), 1u);
  EXPECT_FALSE(parse_router_choice("no digits").has_value());
  EXPECT_FALSE(parse_router_choice("<choice>12345678</choice>").has_value());
}

TEST(TtlStep, FullStep) {
  World w;
  script_group(w);
  testkit::TempDir dir;
  auto cfg = config();
  cfg.export_dir = dir.path();
  auto ctx = w.ttl_context();
  auto rep = ttl_step(lighthouse(), ctx, cfg, 1, 0);

  EXPECT_EQ(rep.answer, "1874");
  EXPECT_TRUE(rep.correct);
  EXPECT_EQ(rep.route.index, 2u);
  EXPECT_FALSE(rep.route.fallback);
  ASSERT_EQ(rep.rollouts.size(), 4u);
  EXPECT_EQ(rep.rollouts[0].reward.total(), 1.0);
  EXPECT_EQ(rep.rollouts[1].reward.total(), 0.80);
  EXPECT_TRUE(rep.rollouts[1].reflection_triggered);
  EXPECT_FALSE(rep.rollouts[1].intermediate_correct);
  EXPECT_EQ(rep.rollouts[2].reward.total(), 1.0);
  EXPECT_EQ(rep.rollouts[3].reward.total(), 0.05);
  double mean = (1.0 + 0.8 + 1.0 + 0.05) / 4;
  EXPECT_NEAR(rep.stats.mean, mean, 1e-15);

  EXPECT_EQ(rep.extraction.success, 2u);
  EXPECT_EQ(rep.extraction.failure, 3u);
  ASSERT_TRUE(rep.extraction.pair.has_value());
  EXPECT_NE(rep.extraction.pair->success_plan.find("route-c"), std::string::npos);
  EXPECT_NE(rep.extraction.pair->failed_plan.find("route-d"), std::string::npos);
  ASSERT_EQ(rep.consolidation.outcomes.size(), 2u);
  EXPECT_EQ(w.store().size(), 2u);
  EXPECT_EQ(w.meta().size(), 1u);
  auto units = w.store().units();
  EXPECT_EQ(units[0].workflow, "WF-OK recall the year");
  EXPECT_EQ(units[0].label, memory::Judgment::Correct);
  EXPECT_EQ(units[1].label, memory::Judgment::Incorrect);

  ASSERT_FALSE(rep.events.empty());
  EXPECT_EQ(rep.events[0].kind, "answer");
  for (std::size_t i = 1; i < rep.events.size(); ++i) EXPECT_EQ(rep.events[i].kind, "verdict");

  ASSERT_TRUE(rep.manifest.has_value());
  EXPECT_EQ(rep.manifest->file.filename(), "e1-0000-lh.jsonl");
  auto verify = rl::verify_export(dir / "e1-0000-lh.manifest.json");
  EXPECT_TRUE(verify.ok()) << (verify.problems.empty() ? "" : verify.problems[0]);
  EXPECT_EQ(verify.records, 4u);
  auto lines = read_jsonl(dir / "e1-0000-lh.jsonl");
  EXPECT_EQ(lines[0]["trainable_model"], "planner-model");
  EXPECT_EQ(lines[0]["frozen_model"], "executor-model");

  for (const auto& p : w.recorder().prompts_for(agent::kPlannerAgent)) {
    EXPECT_NE(p.find("Harbor Lighthouse"), std::string::npos);
  }
  auto router = w.recorder().prompts_for(kRouterAgent).at(0);
  EXPECT_NE(router.find(kNoExamples), std::string::npos);
  EXPECT_EQ(router.find("1900"), std::string::npos);
  EXPECT_NE(router.find("Candidate 3:"), std::string::npos);
}

TEST(TtlStep, FailurePickIsSeeded) {
  // Two failures (b never recovers here); the pick follows the documented RNG.
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 123456789012345ull}) {
    World w;
    w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::keep_reply()});
    w.on(agent::kPlannerAgent, {testkit::kPlannerMarker},
         {testkit::plan_reply({"route-a"}), testkit::plan_reply({"route-b"}), testkit::plan_reply({"route-c"}),
          testkit::plan_reply({"route-d"})});
    w.on(agent::kExecutorAgent, {"route-a"}, {testkit::answer_reply("1874")});
    w.on(agent::kExecutorAgent, {}, {testkit::answer_reply("1900")});
    w.on(judging::kJudgeAgent, {}, {"incorrect"});
    w.on(kRouterAgent, {}, {"<choice>0</choice>"});
    w.on(agent::kCompressAgent, {}, {testkit::workflow_reply("wf")});
    auto cfg = config();
    cfg.seed = seed;
    auto ctx = w.ttl_context();
    auto rep = ttl_step(lighthouse(), ctx, cfg, 3, 5);
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 3u, 5u};
    std::mt19937_64 rng(sq);
    std::vector<std::size_t> fails{1, 2, 3};
    EXPECT_EQ(rep.extraction.failure, fails[rng() % 3]);
    EXPECT_EQ(rep.extraction.success, 0u);
  }
}

TEST(TtlStep, GoldNeverChangesTheAnswer) {
  auto run = [](const std::string& gold) {
    World w;
    script_group(w);
    auto ctx = w.ttl_context();
    auto rep = ttl_step(lighthouse(gold), ctx, config(), 1, 0);
    std::vector<std::string> prompts;
    for (const auto* a : {agent::kPlannerAgent, agent::kExecutorAgent, kRouterAgent}) {
      for (auto& p : w.recorder().prompts_for(a)) prompts.push_back(p);
    }
    return std::make_tuple(rep.answer, rep.route.index, prompts, rep.correct);
  };
  auto [a1, r1, p1, c1] = run("1874");
  auto [a2, r2, p2, c2] = run("1900");
  EXPECT_EQ(a1, a2);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(p1, p2);
  EXPECT_NE(c1, c2);
  for (const auto& p : p2) EXPECT_EQ(p.find("gold"), std::string::npos);
}

TEST(TtlStep, RouterFallbackAndReroute) {
  {
    World w;
    script_group(w, "I cannot decide");
    auto ctx = w.ttl_context();
    auto rep = ttl_step(lighthouse(), ctx, config(), 1, 0);
    EXPECT_TRUE(rep.route.fallback);
    EXPECT_EQ(rep.route.index, 0u);
  }
  {
    World w;
    script_group(w, "<choice>9</choice>");
    auto ctx = w.ttl_context();
    EXPECT_TRUE(ttl_step(lighthouse(), ctx, config(), 1, 0).route.fallback);
  }
  {
    World w;
    gateway::ScriptRule fail;
    fail.agent = agent::kExecutorAgent;
    fail.contains = {"route-a"};
    fail.replies.push_back(gateway::ScriptedReply::transport_failure());
    w.rule(fail);
    script_group(w, "<choice>0</choice>");
    testkit::TempDir dir;
    auto cfg = config();
    cfg.export_dir = dir.path();
    auto ctx = w.ttl_context();
    auto rep = ttl_step(lighthouse(), ctx, cfg, 1, 0);
    EXPECT_TRUE(rep.route.rerouted);
    EXPECT_EQ(rep.route.index, 1u);
    EXPECT_TRUE(rep.rollouts[0].aborted);
    EXPECT_EQ(rep.rollouts[0].reward.twentieths, 0);
    EXPECT_NE(rep.extraction.success, 0u);
    EXPECT_NE(rep.extraction.failure, 0u);
    auto lines = read_jsonl(dir / "e1-0000-lh.jsonl");
    EXPECT_TRUE(lines[0]["failed"].get<bool>());
    EXPECT_TRUE(rl::verify_export(dir / "e1-0000-lh.manifest.json").ok());
  }
}

TEST(TtlStep, RolloutGroupRejectsGold) {
  World w;
  auto ctx = w.ttl_context();
  EXPECT_THROW(rollout_group(lighthouse(), ctx, config()), PreconditionError);
}

TEST(Extraction, ShortestSuccessAndUsableFailure) {
  std::mt19937_64 gen(31);
  memory::Vector emb{1.0};
  for (int trial = 0; trial < 300; ++trial) {
    RolloutGroup g;
    std::vector<bool> correct;
    std::size_t n = 1 + gen() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      bool usable = gen() % 5 != 0;
      g.rollouts.push_back(fake_rollout(1 + gen() % 4, usable));
      correct.push_back(usable && gen() % 2);
    }
    std::mt19937_64 rng(trial);
    auto ex = extract_paradigms(g, correct, rng, LengthMetric::Steps, emb);
    std::optional<std::size_t> best;
    std::vector<std::size_t> fails;
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.rollouts[i].usable()) continue;
      if (correct[i]) {
        if (!best || g.rollouts[i].trajectory.length() < g.rollouts[*best].trajectory.length()) best = i;
      } else {
        fails.push_back(i);
      }
    }
    EXPECT_EQ(ex.success, best);
    if (fails.empty()) {
      EXPECT_FALSE(ex.failure.has_value());
    } else {
      ASSERT_TRUE(ex.failure.has_value());
      EXPECT_NE(std::find(fails.begin(), fails.end(), *ex.failure), fails.end());
    }
    EXPECT_EQ(ex.pair.has_value(), ex.success.has_value() && ex.failure.has_value());
  }
}

TEST(RunTtl, SecondEpochSeesFirstEpochMemory) {
  World w;
  script_group(w);
  auto ctx = w.ttl_context();
  auto cfg = config();
  cfg.epochs = 2;
  std::vector<EpochSummary> seen;
  RunOptions opt;
  opt.on_epoch_end = [&](const EpochSummary& s) { seen.push_back(s); };
  auto before = w.recorder().prompts_for(agent::kPlannerAgent).size();
  EXPECT_EQ(before, 0u);
  auto run = run_ttl({lighthouse()}, ctx, cfg, opt);
  ASSERT_EQ(run.epochs.size(), 2u);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].memory_size, 2u);
  EXPECT_EQ(seen[0].meta_pairs, 1u);
  std::vector<std::string> planner_prompts;
  for (auto& p : w.recorder().prompts_for(agent::kPlannerAgent)) {
    if (p.find(testkit::kPlannerMarker) != std::string::npos) planner_prompts.push_back(p);
  }
  ASSERT_EQ(planner_prompts.size(), 8u);
  EXPECT_EQ(planner_prompts.front().find("WF-OK"), std::string::npos);
  EXPECT_NE(planner_prompts.back().find("WF-OK"), std::string::npos);
  EXPECT_EQ(w.recorder().prompts_for(kRouterAgent).back().find(kNoExamples), std::string::npos);
  auto lines = run.epochs[0].metric_lines();
  EXPECT_NE(std::find(lines.begin(), lines.end(), "epoch.1.accuracy=1.000000"), lines.end());
  EXPECT_EQ(run.to_json()["epochs"].size(), 2u);
}

TEST(RunTtl, StopAfterSteps) {
  World w;
  script_group(w);
  auto ctx = w.ttl_context();
  auto cfg = config();
  cfg.epochs = 3;
  RunOptions opt;
  opt.stop_after_steps = 2;
  auto t2 = lighthouse();
  t2.id = "lh2";
  auto run = run_ttl({lighthouse(), t2}, ctx, cfg, opt);
  EXPECT_TRUE(run.interrupted);
  EXPECT_EQ(run.steps.size(), 2u);
  EXPECT_EQ(run.epochs.size(), 1u);
}

TEST(RunTtl, TrainerHookSwapsPlannerModel) {
  World w;
  script_group(w);
  testkit::TempDir dir;
  auto cfg = config();
  cfg.export_dir = dir.path();
  cfg.trainer_command = "sh -c 'echo ignored; echo trained-v2'";
  auto ctx = w.ttl_context();
  auto rep = ttl_step(lighthouse(), ctx, cfg, 1, 0);
  EXPECT_EQ(rep.trainer_model, "trained-v2");
  EXPECT_EQ(w.gateway().model_for(agent::kPlannerAgent), "trained-v2");
  cfg.trainer_command = "false";
  EXPECT_THROW(ttl_step(lighthouse(), ctx, cfg, 1, 1), Error);
}

TEST(RunTtl, SelectiveClearWhenEnabled) {
  World w;
  script_group(w);
  memory::MemoryUnit stale;
  stale.bucket = {"image", "general"};
  stale.question = "old";
  stale.question_embedding = w.embedder()->encode("old");
  stale.label = memory::Judgment::Incorrect;
  stale.usage = 5;
  auto id = w.store().insert(stale);
  auto cfg = config();
  cfg.selective_clear = true;
  auto ctx = w.ttl_context();
  auto rep = ttl_step(lighthouse(), ctx, cfg, 1, 0);
  EXPECT_EQ(rep.cleared, 1u);
  EXPECT_FALSE(w.store().find(id).has_value());
}

TEST(RunTtl, UnsupervisedUsesPeerReview) {
  World w;
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::keep_reply()});
  w.on(agent::kPlannerAgent, {}, {testkit::plan_reply({"recall"})});
  w.on(agent::kExecutorAgent, {}, {testkit::answer_reply("1874")});
  for (auto r : judging::kReviewerRoles) w.on(judging::gateway_agent(r), {}, {testkit::review_reply(0.9)});
  w.on(judging::kAreaChairAgent, {}, {testkit::chair_reply(true)});
  w.on(kRouterAgent, {}, {"<choice>0</choice>"});
  w.on(agent::kCompressAgent, {}, {testkit::workflow_reply("wf")});
  auto cfg = config();
  cfg.group_size = 2;
  cfg.mode = JudgeMode::Unsupervised;
  auto ctx = w.ttl_context(false);
  auto task = lighthouse();
  task.gold.reset();
  auto run = run_ttl({task}, ctx, cfg);
  EXPECT_TRUE(run.steps[0].correct);
  EXPECT_EQ(w.recorder().count(judging::kAreaChairAgent), 2u);
  EXPECT_EQ(run.epochs[0].rate_name(), "acceptance_rate");
  EXPECT_FALSE(run.steps[0].extraction.pair.has_value());
  for (const auto& a : run.steps[0].stats.advantages) EXPECT_EQ(a, 0.0);
}
