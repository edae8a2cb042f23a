#include "memplan/training/training.hpp"

#include <cctype>
#include <future>

#include "memplan/agent/planner.hpp"
#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/rl/advantage.hpp"
#include "memplan/rl/reward.hpp"

namespace memplan::training {

namespace {

nlohmann::json opt_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

template <typename Fn>
std::vector<StageRollout> run_group(std::size_t n, bool parallel, Fn&& one) {
  std::vector<StageRollout> out;
  if (parallel) {
    std::vector<std::future<StageRollout>> futures;
    for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, one));
    for (auto& f : futures) out.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(one());
  }
  return out;
}

void finish(StageResult& res, const agent::Task& task, StageContext& ctx, const StageConfig& cfg) {
  std::vector<double> rewards;
  for (const auto& r : res.rollouts) rewards.push_back(r.reward.total());
  res.stats = rl::group_advantages(rewards, cfg.grpo.advantage_epsilon, cfg.grpo.population_std);
  for (std::size_t i = 0; i < res.rollouts.size(); ++i) res.rollouts[i].advantage = res.stats.advantages[i];

  const bool exec = cfg.stage == Stage::Executor;
  const auto trainable = exec ? agent::Source::Executor : agent::Source::Planner;
  const char* trainable_agent = exec ? agent::kExecutorAgent : agent::kPlannerAgent;
  const char* frozen_agent = exec ? agent::kPlannerAgent : agent::kExecutorAgent;

  auto& b = res.batch;
  b.task_id = task.id;
  b.stage = std::string(to_string(cfg.stage));
  b.trainable = trainable;
  b.trainable_model = cfg.trainable_model.empty() ? ctx.gateway.model_for(trainable_agent) : cfg.trainable_model;
  b.frozen_model = cfg.frozen_model.empty() ? ctx.gateway.model_for(frozen_agent) : cfg.frozen_model;
  b.config = cfg.grpo;
  b.config.group_size = cfg.group_size;
  b.stats = res.stats;
  b.metadata = {{"batch_size", cfg.batch_size}, {"learning_rate", cfg.learning_rate}};
  for (const auto& r : res.rollouts) {
    rl::ExportRecord rec;
    rec.tokens = rl::rollout_tokens(&r.plan, r.trajectory, trainable);
    rec.reward = r.reward;
    rec.advantage = r.advantage;
    rec.failed = r.aborted;
    rec.facts = {{"final_correct", r.final_correct},
                 {"intermediate_correct", r.intermediate_correct},
                 {"reflection_triggered", r.plan.reflection_triggered},
                 {"format_ok", r.reward.r3 == 1},
                 {"final_answer", opt_json(r.trajectory.final_answer)}};
    if (exec) rec.facts["tool_ok"] = r.reward.r2 == 1;
    b.records.push_back(std::move(rec));
  }
  if (!cfg.export_dir.empty()) {
    res.manifest = rl::export_training_signals(b, cfg.export_dir / (b.stage + "-" + safe_name(task.id)));
  }
}

void require_gold(const agent::Task& task) {
  if (!task.gold) throw PreconditionError("training rollouts need a gold answer (task " + task.id + ")");
}

}  // namespace

std::string_view to_string(Stage s) { return s == Stage::Executor ? "executor" : "planner"; }

Stage stage_from_string(std::string_view s) {
  if (s == "executor" || s == "stage1") return Stage::Executor;
  if (s == "planner" || s == "stage2") return Stage::Planner;
  throw UserError("unknown training stage \"" + std::string(s) + "\" (executor, planner)");
}

void StageConfig::validate() const {
  if (group_size < 1) throw UserError("training group size must be >= 1");
  if (batch_size < 1) throw UserError("training batch size must be >= 1");
  if (rollout_temperature < 0.0) throw UserError("rollout temperature must be non-negative");
  if (!trainable_model.empty() && trainable_model == frozen_model) {
    throw UserError("trainable and frozen model identifiers must differ");
  }
  grpo.validate();
}

nlohmann::json StageRollout::to_json() const {
  return {{"plan", plan.to_json()},
          {"trajectory", trajectory.to_json()},
          {"aborted", aborted},
          {"error", opt_json(error)},
          {"intermediate_correct", intermediate_correct},
          {"final_correct", final_correct},
          {"reward", reward.to_json()},
          {"advantage", advantage}};
}

nlohmann::json StageResult::to_json() const {
  auto rolls = nlohmann::json::array();
  for (const auto& r : rollouts) rolls.push_back(r.to_json());
  return {{"task_id", task_id},
          {"stage", to_string(stage)},
          {"rollouts", rolls},
          {"group", {{"mean", stats.mean}, {"std", stats.stddev}}},
          {"export", manifest ? manifest->to_json() : nlohmann::json(nullptr)}};
}

StageResult stage1_rollout(const agent::Task& task, StageContext& ctx, const StageConfig& cfg) {
  require_gold(task);
  cfg.validate();
  if (cfg.stage != Stage::Executor) throw PreconditionError("stage1_rollout needs an executor stage config");
  const agent::Task blind = task.without_gold();
  std::optional<std::string> caption;
  if (cfg.caption_in_stage1) caption = agent::caption_for(blind, ctx.captioner);
  agent::ExecutorSettings exec = cfg.executor;
  exec.temperature = cfg.rollout_temperature;

  auto one = [&]() {
    StageRollout r;
    agent::Planner planner(ctx.gateway, ctx.prompts);
    try {
      r.plan = planner.make_plan(blind, caption, memory::MemoryContext{}, 0.0);
      auto prefix = agent::executor_prefix(agent::PromptMode::Guideline, ctx.prompts, &r.plan, nullptr);
      agent::ExecutorSession session(ctx.gateway, ctx.prompts, ctx.tools, blind, prefix, exec);
      session.run();
      const auto& t = session.trajectory();
      if (!t.aborted) {
        r.intermediate_correct =
            ctx.judge.evaluate(task, t.until_intermediate(), t.intermediate_answer.value_or(agent::kUnableToDetermine))
                .correct;
        r.final_correct = r.intermediate_correct;
        if (!r.intermediate_correct && session.turns_left() &&
            planner.reflect_replan(blind, caption, r.plan, t, false)) {
          session.inject_plan(r.plan.render_revision(), *r.plan.reflection);
          session.run();
          if (!session.trajectory().aborted) {
            r.final_correct = ctx.judge.evaluate(task, session.trajectory(), *session.trajectory().final_answer).correct;
          }
        }
      }
      r.trajectory = session.trajectory();
      r.aborted = r.trajectory.aborted;
      if (r.aborted) r.error = r.trajectory.abort_reason;
    } catch (const gateway::GatewayError& e) {
      r.aborted = true;
      r.error = e.what();
    }
    if (r.aborted) {
      r.final_correct = r.intermediate_correct = false;
      r.reward = rl::executor_reward(false, false, false);
    } else {
      r.reward = rl::executor_reward(r.final_correct, rl::tool_reward(r.trajectory), rl::format_reward(r.trajectory));
    }
    return r;
  };

  StageResult res;
  res.task_id = task.id;
  res.stage = cfg.stage;
  res.rollouts = run_group(cfg.group_size, cfg.parallel_rollouts, one);
  finish(res, task, ctx, cfg);
  return res;
}

StageResult stage2_rollout(const agent::Task& task, const ArchivedContext& context, StageContext& ctx,
                           const StageConfig& cfg) {
  require_gold(task);
  cfg.validate();
  if (cfg.stage != Stage::Planner) throw PreconditionError("stage2_rollout needs a planner stage config");
  if (context.task_id != task.id) {
    throw PreconditionError("archived context belongs to task " + context.task_id + ", not " + task.id);
  }
  const agent::Task blind = task.without_gold();
  agent::ExecutorSettings exec = cfg.executor;
  exec.temperature = 0.0;

  auto one = [&]() {
    StageRollout r;
    agent::Planner planner(ctx.gateway, ctx.prompts);
    try {
      r.plan = planner.make_plan(blind, context.caption, context.context, cfg.rollout_temperature);
      auto prefix = agent::executor_prefix(agent::PromptMode::Guideline, ctx.prompts, &r.plan, nullptr);
      agent::ExecutorSession session(ctx.gateway, ctx.prompts, ctx.tools, blind, prefix, exec);
      session.run();
      if (!session.trajectory().aborted && session.turns_left() &&
          planner.reflect_replan(blind, context.caption, r.plan, session.trajectory(), std::nullopt,
                                 cfg.rollout_temperature)) {
        session.inject_plan(r.plan.render_revision(), *r.plan.reflection);
        session.run();
      }
      r.trajectory = session.trajectory();
      r.aborted = r.trajectory.aborted;
      if (r.aborted) {
        r.error = r.trajectory.abort_reason;
      } else {
        const auto& t = r.trajectory;
        r.final_correct = ctx.judge.evaluate(task, t, *t.final_answer).correct;
        r.intermediate_correct = r.final_correct;
        if (r.plan.reflection_triggered) {
          r.intermediate_correct =
              ctx.judge.evaluate(task, t.until_intermediate(), t.intermediate_answer.value_or(agent::kUnableToDetermine))
                  .correct;
        }
      }
    } catch (const gateway::GatewayError& e) {
      r.aborted = true;
      r.error = e.what();
    }
    if (r.aborted) {
      r.final_correct = r.intermediate_correct = false;
      r.reward = rl::planner_reward(false, false, false, false, false);
    } else {
      r.reward = rl::planner_reward(r.final_correct, r.intermediate_correct, r.plan.reflection_triggered,
                                    r.intermediate_correct, rl::plan_format_reward(r.plan));
    }
    return r;
  };

  StageResult res;
  res.task_id = task.id;
  res.stage = cfg.stage;
  res.rollouts = run_group(cfg.group_size, cfg.parallel_rollouts, one);
  finish(res, task, ctx, cfg);
  return res;
}

nlohmann::json ArchivedContext::to_json() const {
  return {{"task_id", task_id},
          {"question", question},
          {"caption", opt_json(caption)},
          {"bucket", bucket.str()},
          {"context", context.to_json()}};
}

ArchivedContext ArchivedContext::from_json(const nlohmann::json& j) {
  ArchivedContext c;
  c.task_id = j.at("task_id").get<std::string>();
  c.question = j.at("question").get<std::string>();
  if (!j.at("caption").is_null()) c.caption = j.at("caption").get<std::string>();
  c.bucket = memory::BucketKey::parse(j.at("bucket").get<std::string>());
  c.context = memory::MemoryContext::from_json(j.at("context"));
  return c;
}

std::string render_context_archive(const std::vector<ArchivedContext>& contexts) {
  std::vector<nlohmann::json> lines{{{"schema", kContextSchema}, {"contexts", contexts.size()}}};
  for (const auto& c : contexts) lines.push_back(c.to_json());
  return dump_jsonl(lines);
}

std::vector<ArchivedContext> load_context_archive(const std::filesystem::path& archive) {
  auto lines = read_jsonl(archive);
  if (lines.empty() || lines.front().value("schema", std::string()) != kContextSchema) {
    throw FormatError(archive.string() + ": missing or unsupported schema header");
  }
  std::vector<ArchivedContext> out;
  try {
    for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(ArchivedContext::from_json(lines[i]));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(archive.string() + ": " + e.what());
  }
  if (lines.front().value("contexts", std::size_t{0}) != out.size()) {
    throw FormatError(archive.string() + ": context count does not match header");
  }
  return out;
}

std::vector<ArchivedContext> collect_stage2_contexts(const std::vector<agent::Task>& tasks, agent::EpisodeDeps& deps,
                                                     const agent::EpisodeOptions& options,
                                                     const std::filesystem::path& archive) {
  if (!deps.manager) throw PreconditionError("collecting contexts needs a memory manager");
  if (std::filesystem::exists(archive)) {
    throw UserError("context archive " + archive.string() + " already exists; archives are never overwritten");
  }
  std::vector<ArchivedContext> out;
  for (const auto& task : tasks) {
    ArchivedContext c;
    c.task_id = task.id;
    c.question = task.question;
    c.caption = agent::caption_for(task, deps.captioner);
    c.bucket = deps.manager->bucket_for(task);
    c.context = deps.manager->retrieve(task, c.caption, c.bucket);
    auto opts = options;
    opts.preset_context = c.context;
    auto rec = agent::run_episode(task, deps, opts);
    if (rec.error) throw Error("context collection episode failed for task " + task.id + ": " + *rec.error);
    out.push_back(std::move(c));
  }
  if (!archive.parent_path().empty()) std::filesystem::create_directories(archive.parent_path());
  write_file_atomic(archive, render_context_archive(out));
  return out;
}

}  // namespace memplan::training
