#include <iostream>

#include <CLI11.hpp>

#include "memplan/harness/commands.hpp"

namespace h = memplan::harness;

namespace {

void add_common(CLI::App* app, h::CommonOptions& common) {
  app->add_option("-c,--config", common.config, "Run configuration file (JSON)")->required();
  app->add_option("--mode", common.mode, "Judge mode override: supervised or unsupervised");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memplan: planner/executor research agent with workflow memory"};
  app.require_subcommand(1);

  h::EpisodeCommand episode;
  auto* ep = app.add_subcommand("episode", "Run one task and write its episode record");
  add_common(ep, episode.common);
  ep->add_option("-t,--tasks", episode.tasks, "Task file (JSON lines)")->required();
  ep->add_option("--task-id", episode.task_id, "Id of the task to run")->required();

  h::EvalCommand eval;
  auto* ev = app.add_subcommand("eval", "Run every task once and report accuracy");
  add_common(ev, eval.common);
  ev->add_option("-t,--tasks", eval.tasks, "Task file (JSON lines)")->required();

  h::TtlCommand ttl;
  auto* tt = app.add_subcommand("ttl", "Test-time learning over a task sequence");
  add_common(tt, ttl.common);
  tt->add_option("-t,--tasks", ttl.tasks, "Task file (JSON lines)")->required();
  tt->add_option("--stop-after-steps", ttl.stop_after_steps, "Stop after this many steps (epoch left incomplete)");

  h::MemCommand mem;
  auto* me = app.add_subcommand("mem", "Inspect, score or clear the memory store");
  add_common(me, mem.common);
  me->add_option("action", mem.action, "inspect | score | clear")->required()->check(
      CLI::IsMember({"inspect", "score", "clear"}));
  me->add_option("-q,--question", mem.question, "Query question (score)");
  me->add_option("--caption", mem.caption, "Query image caption (score)");
  me->add_option("--bucket", mem.bucket, "Bucket as modality/category (score), default text/general");
  me->add_flag("--dry-run", mem.dry_run, "Report what clear would remove without writing");
  me->add_flag("--json", mem.json, "Machine-readable output, one JSON object per line");

  h::StageCommand stage1;
  auto* s1 = app.add_subcommand("stage1", "Collect scored executor rollouts with a frozen planner");
  add_common(s1, stage1.common);
  s1->add_option("-t,--tasks", stage1.tasks, "Task file (JSON lines)")->required();

  h::StageCommand collect;
  auto* cc = app.add_subcommand("collect-contexts", "Build memory and archive per-task planner contexts");
  add_common(cc, collect.common);
  cc->add_option("-t,--tasks", collect.tasks, "Task file (JSON lines)")->required();
  cc->add_option("--archive", collect.archive, "Archive path (default <output_dir>/contexts.jsonl)");

  h::StageCommand stage2;
  auto* s2 = app.add_subcommand("stage2", "Collect scored planner rollouts against a frozen executor");
  add_common(s2, stage2.common);
  s2->add_option("-t,--tasks", stage2.tasks, "Task file (JSON lines)")->required();
  s2->add_option("--archive", stage2.archive, "Archive path (default <output_dir>/contexts.jsonl)");

  h::VerifyCommand verify;
  auto* vf = app.add_subcommand("export-verify", "Check exported training signals against their manifests");
  vf->add_option("manifests", verify.manifests, "Manifest files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? h::kExitOk : h::kExitUserError;
  }

  if (*ep) return h::cmd_episode(episode, std::cout, std::cerr);
  if (*ev) return h::cmd_eval(eval, std::cout, std::cerr);
  if (*tt) return h::cmd_ttl(ttl, std::cout, std::cerr);
  if (*me) return h::cmd_mem(mem, std::cout, std::cerr);
  if (*s1) return h::cmd_stage1(stage1, std::cout, std::cerr);
  if (*cc) return h::cmd_collect_contexts(collect, std::cout, std::cerr);
  if (*s2) return h::cmd_stage2(stage2, std::cout, std::cerr);
  if (*vf) return h::cmd_export_verify(verify, std::cout, std::cerr);
  return h::kExitUserError;
}
