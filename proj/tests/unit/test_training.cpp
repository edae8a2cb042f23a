#include <gtest/gtest.h>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/training/training.hpp"
#include "support.hpp"

using namespace memplan;
using namespace memplan::training;
using testkit::World;

namespace {

agent::Task lighthouse() {
  return {"lh", "In which year was the Harbor Lighthouse completed?", std::nullopt, std::string("1874"), std::nullopt};
}

StageContext stage_ctx(World& w) { return {w.gateway(), w.prompts(), w.tools(), w.gold_judge(), nullptr}; }

StageConfig stage_cfg(Stage s, std::size_t g) {
  StageConfig c;
  c.stage = s;
  c.group_size = g;
  return c;
}

std::vector<double> temperatures(World& w, const std::string& agent) {
  std::vector<double> out;
  for (const auto& r : w.recorder().requests()) {
    if (r.agent == agent) out.push_back(r.temperature);
  }
  return out;
}

}  // namespace

TEST(StageNames, RoundTrip) {
  EXPECT_EQ(to_string(Stage::Executor), "executor");
  EXPECT_EQ(stage_from_string("stage2"), Stage::Planner);
  EXPECT_EQ(stage_from_string("planner"), Stage::Planner);
  EXPECT_THROW(stage_from_string("critic"), UserError);
  StageConfig c;
  c.trainable_model = c.frozen_model = "same";
  EXPECT_THROW(c.validate(), UserError);
}

TEST(Stage1, OneRightOneWrong) {
  World w;
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::keep_reply()});
  w.on(agent::kPlannerAgent, {}, {testkit::plan_reply({"search the lighthouse"})});
  w.on(agent::kExecutorAgent, {},
       {testkit::search_reply("Harbor Lighthouse"), testkit::answer_reply("1874"), testkit::search_reply("lighthouse"),
        testkit::answer_reply("1900")});
  w.on(judging::kJudgeAgent, {}, {"incorrect"});
  testkit::TempDir dir;
  auto cfg = stage_cfg(Stage::Executor, 2);
  cfg.export_dir = dir.path();
  auto ctx = stage_ctx(w);
  auto res = stage1_rollout(lighthouse(), ctx, cfg);
  ASSERT_EQ(res.rollouts.size(), 2u);
  EXPECT_EQ(res.rollouts[0].reward.total(), 1.0);
  EXPECT_EQ(res.rollouts[1].reward.total(), 0.3);
  EXPECT_NEAR(res.stats.advantages[0], 0.9997, 1e-4);
  EXPECT_NEAR(res.stats.advantages[1], -0.9997, 1e-4);
  EXPECT_TRUE(res.rollouts[1].plan.reflection_consulted);
  EXPECT_FALSE(res.rollouts[1].plan.reflection_triggered);
  auto replan = w.recorder().prompts_for(agent::kPlannerAgent).back();
  EXPECT_NE(replan.find("found to be incorrect"), std::string::npos);

  for (double t : temperatures(w, agent::kExecutorAgent)) EXPECT_EQ(t, 1.0);
  for (double t : temperatures(w, agent::kPlannerAgent)) EXPECT_EQ(t, 0.0);

  for (const auto& rec : res.batch.records) {
    for (const auto& tok : rec.tokens) EXPECT_EQ(tok.mask, tok.source == agent::Source::Executor);
  }
  EXPECT_EQ(res.batch.trainable_model, "executor-model");
  EXPECT_EQ(res.batch.frozen_model, "planner-model");
  ASSERT_TRUE(res.manifest.has_value());
  EXPECT_EQ(res.manifest->file.filename(), "executor-lh.jsonl");
  auto verify = rl::verify_export(dir / "executor-lh.manifest.json");
  EXPECT_TRUE(verify.ok()) << (verify.problems.empty() ? "" : verify.problems[0]);
  auto lines = read_jsonl(dir / "executor-lh.jsonl");
  EXPECT_EQ(lines[0]["metadata"]["batch_size"], 128);
  EXPECT_EQ(lines[0]["trainable"], "executor");
}

TEST(Stage1, ReplanRecoversAndAllEqualGivesZero) {
  World w;
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::replan_reply({"read the record"})});
  w.on(agent::kPlannerAgent, {}, {testkit::plan_reply({"guess"})});
  w.on_last(agent::kExecutorAgent, {testkit::kInjectionMarker}, {testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {}, {testkit::answer_reply("1900")});
  w.on(judging::kJudgeAgent, {}, {"incorrect"});
  auto ctx = stage_ctx(w);
  auto res = stage1_rollout(lighthouse(), ctx, stage_cfg(Stage::Executor, 1));
  const auto& r = res.rollouts[0];
  EXPECT_FALSE(r.intermediate_correct);
  EXPECT_TRUE(r.final_correct);
  EXPECT_TRUE(r.plan.reflection_triggered);
  EXPECT_EQ(res.stats.advantages[0], 0.0);
  for (const auto& tok : res.batch.records[0].tokens) {
    if (tok.source == agent::Source::Planner) {
      EXPECT_FALSE(tok.mask);
    }
  }
}

TEST(Stage1, RequiresGoldAndExecutorStage) {
  World w;
  auto ctx = stage_ctx(w);
  auto t = lighthouse();
  t.gold.reset();
  EXPECT_THROW(stage1_rollout(t, ctx, stage_cfg(Stage::Executor, 1)), PreconditionError);
  EXPECT_THROW(stage1_rollout(lighthouse(), ctx, stage_cfg(Stage::Planner, 1)), PreconditionError);
}

TEST(Stage2, PlannerRewardsAndMask) {
  World w;
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker, "route-b"}, {testkit::replan_reply({"verify-b"})});
  w.on(agent::kPlannerAgent, {testkit::kReplanMarker}, {testkit::keep_reply()});
  w.on(agent::kPlannerAgent, {}, {testkit::plan_reply({"route-a"}), testkit::plan_reply({"route-b"})});
  w.on_last(agent::kExecutorAgent, {"verify-b"}, {testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {"route-a"}, {testkit::answer_reply("1874")});
  w.on(agent::kExecutorAgent, {"route-b"}, {testkit::answer_reply("1900")});
  w.on(judging::kJudgeAgent, {}, {"incorrect"});

  ArchivedContext archived;
  archived.task_id = "lh";
  archived.question = lighthouse().question;
  memory::MemoryUnit u;
  u.id = 4;
  u.workflow = "ARCHIVED-WF";
  archived.context.positives.push_back(u);

  testkit::TempDir dir;
  auto cfg = stage_cfg(Stage::Planner, 2);
  cfg.export_dir = dir.path();
  auto ctx = stage_ctx(w);
  auto res = stage2_rollout(lighthouse(), archived, ctx, cfg);
  EXPECT_EQ(res.rollouts[0].reward.total(), 1.0);
  EXPECT_EQ(res.rollouts[1].reward.total(), 0.80);
  EXPECT_NE(w.recorder().prompts_for(agent::kPlannerAgent).at(0).find("ARCHIVED-WF"), std::string::npos);
  for (double t : temperatures(w, agent::kExecutorAgent)) EXPECT_EQ(t, 0.0);
  for (const auto& rec : res.batch.records) {
    for (const auto& tok : rec.tokens) EXPECT_EQ(tok.mask, tok.source == agent::Source::Planner);
  }
  EXPECT_EQ(res.batch.trainable_model, "planner-model");
  auto verify = rl::verify_export(dir / "planner-lh.manifest.json");
  EXPECT_TRUE(verify.ok()) << (verify.problems.empty() ? "" : verify.problems[0]);

  archived.task_id = "other";
  EXPECT_THROW(stage2_rollout(lighthouse(), archived, ctx, cfg), PreconditionError);
}

TEST(Contexts, CollectGrowsAndRoundTrips) {
  World w;
  w.on(agent::kPlannerAgent, {}, {testkit::plan_reply({"search"})});
  w.on(agent::kExecutorAgent, {}, {testkit::answer_reply("1874")});
  w.on(judging::kJudgeAgent, {}, {"correct"});
  w.on(agent::kCompressAgent, {}, {testkit::workflow_reply("LIGHTHOUSE-WF")});
  std::vector<agent::Task> tasks{lighthouse(), lighthouse(), lighthouse()};
  tasks[1].id = "lh2";
  tasks[1].question = "When was the Harbor Lighthouse finished?";
  tasks[2].id = "lh3";
  tasks[2].question = "What year did the Harbor Lighthouse open?";
  testkit::TempDir dir;
  auto deps = w.deps(true);
  agent::EpisodeOptions opt;
  auto contexts = collect_stage2_contexts(tasks, deps, opt, dir / "ctx.jsonl");
  ASSERT_EQ(contexts.size(), 3u);
  EXPECT_TRUE(contexts[0].context.empty());
  EXPECT_FALSE(contexts[1].context.empty());
  EXPECT_EQ(contexts[1].context.positives[0].workflow, "LIGHTHOUSE-WF");
  auto back = load_context_archive(dir / "ctx.jsonl");
  EXPECT_EQ(render_context_archive(back), render_context_archive(contexts));
  EXPECT_EQ(read_file(dir / "ctx.jsonl"), render_context_archive(contexts));
  EXPECT_THROW(collect_stage2_contexts(tasks, deps, opt, dir / "ctx.jsonl"), UserError);

  write_file_atomic(dir / "bad.jsonl", "{\"schema\": \"memplan.contexts.v1\", \"contexts\": 2}\n");
  EXPECT_THROW(load_context_archive(dir / "bad.jsonl"), FormatError);
}
