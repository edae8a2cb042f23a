#include "memplan/ttl/ttl.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <future>

#include <fmt/format.h>

#include "memplan/common/error.hpp"
#include "memplan/common/format.hpp"
#include "memplan/common/text.hpp"

namespace memplan::ttl {

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

nlohmann::json opt_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json opt_index(const std::optional<std::size_t>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

Rollout run_one(const agent::Task& task, const RolloutGroup& group, TtlContext& ctx, const TtlConfig& cfg) {
  Rollout r;
  agent::Planner planner(ctx.gateway, ctx.prompts);
  try {
    r.plan = planner.make_plan(task, group.caption, group.context, cfg.plan_temperature);
    auto prefix = agent::executor_prefix(agent::PromptMode::Guideline, ctx.prompts, &r.plan, nullptr);
    agent::ExecutorSession session(ctx.gateway, ctx.prompts, ctx.tools, task, prefix, cfg.executor);
    session.run();
    if (cfg.reflection && !session.trajectory().aborted && session.turns_left() &&
        planner.reflect_replan(task, group.caption, r.plan, session.trajectory(), std::nullopt)) {
      session.inject_plan(r.plan.render_revision(), *r.plan.reflection);
      session.run();
    }
    r.trajectory = session.trajectory();
    r.aborted = r.trajectory.aborted;
    if (r.aborted) r.error = r.trajectory.abort_reason;
  } catch (const gateway::GatewayError& e) {
    r.aborted = true;
    r.error = e.what();
  }
  return r;
}

// Runs a trainer command with the manifest path; the last non-empty stdout
// line is the new planner model id.
std::string run_trainer(const std::string& command, const std::filesystem::path& manifest) {
  auto cmd = command + " '" + manifest.string() + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw Error("could not start trainer command: " + command);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  int status = pclose(pipe);
  if (status != 0) throw Error("trainer command failed with status " + std::to_string(status) + ": " + command);
  std::string model;
  for (const auto& line : text::split_lines(out)) {
    if (!text::trim(line).empty()) model = std::string(text::trim(line));
  }
  if (model.empty()) throw Error("trainer command printed no model id: " + command);
  return model;
}

}  // namespace

std::string_view to_string(JudgeMode m) { return m == JudgeMode::Supervised ? "supervised" : "unsupervised"; }

JudgeMode judge_mode_from_string(std::string_view s) {
  if (s == "supervised") return JudgeMode::Supervised;
  if (s == "unsupervised") return JudgeMode::Unsupervised;
  throw UserError("unknown judge mode \"" + std::string(s) + "\" (supervised, unsupervised)");
}

LengthMetric length_metric_from_string(std::string_view s) {
  if (s == "steps") return LengthMetric::Steps;
  if (s == "tokens") return LengthMetric::Tokens;
  throw UserError("unknown length metric \"" + std::string(s) + "\" (steps, tokens)");
}

void TtlConfig::validate() const {
  if (group_size < 1) throw UserError("ttl group size must be >= 1");
  if (epochs < 1) throw UserError("ttl epochs must be >= 1");
  if (plan_temperature < 0.0) throw UserError("plan temperature must be non-negative");
  grpo.validate();
}

std::size_t Rollout::length(LengthMetric metric) const {
  if (metric == LengthMetric::Steps) return trajectory.length();
  std::size_t n = 0;
  for (const auto& s : trajectory.segments) n += text::count_tokens(s.text);
  return n;
}

std::size_t RolloutGroup::usable() const {
  std::size_t n = 0;
  for (const auto& r : rollouts) n += r.usable() ? 1 : 0;
  return n;
}

RolloutGroup rollout_group(const agent::Task& task, TtlContext& ctx, const TtlConfig& cfg) {
  if (task.gold) throw PreconditionError("rollouts must not see the gold answer");
  if (cfg.group_size < 1) throw PreconditionError("group size must be >= 1");
  RolloutGroup g;
  g.question = task.question;
  g.caption = agent::caption_for(task, ctx.captioner);
  g.bucket = ctx.manager.bucket_for(task);
  g.context = ctx.manager.retrieve(task, g.caption, g.bucket);
  if (cfg.parallel_rollouts) {
    std::vector<std::future<Rollout>> futures;
    for (std::size_t i = 0; i < cfg.group_size; ++i) {
      futures.push_back(std::async(std::launch::async, [&] { return run_one(task, g, ctx, cfg); }));
    }
    for (auto& f : futures) g.rollouts.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < cfg.group_size; ++i) g.rollouts.push_back(run_one(task, g, ctx, cfg));
  }
  return g;
}

std::optional<std::size_t> parse_router_choice(std::string_view reply) {
  std::string body;
  std::string_view s = reply;
  if (text::extract_tag(reply, "choice", body)) s = body;
  s = text::trim(s);
  std::size_t i = 0;
  while (i < s.size() && !std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == s.size()) return std::nullopt;
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j - i > 6) return std::nullopt;
  return static_cast<std::size_t>(std::stoul(std::string(s.substr(i, j - i))));
}

std::string plan_text(const agent::Plan& plan) {
  auto out = plan.render();
  if (plan.revision) out += "\nRevision:\n" + plan.render_revision();
  return out;
}

RouteDecision route_final(const std::string& question, const RolloutGroup& group, const memory::MetaPlanStore& meta,
                          TtlContext& ctx, std::size_t examples) {
  if (group.rollouts.empty()) throw PreconditionError("routing needs at least one candidate");
  std::string ex;
  if (examples > 0) {
    auto pairs = meta.select(ctx.manager.embedder().encode(question), examples);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (i > 0) ex += "\n\n";
      ex += "[" + std::to_string(i + 1) + "] Question: " + pairs[i].question + "\nPlan that succeeded:\n" +
            pairs[i].success_plan + "\nPlan that failed:\n" + pairs[i].failed_plan;
    }
  }
  if (ex.empty()) ex = kNoExamples;
  std::string cands;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    if (i > 0) cands += "\n\n";
    const auto& p = group.rollouts[i].plan;
    cands += "Candidate " + std::to_string(i) + ":\n" + (p.steps.empty() ? std::string("(no plan)") : p.render());
  }
  gateway::ChatRequest req;
  req.agent = kRouterAgent;
  req.messages.push_back({gateway::Role::User,
                          ctx.prompts.render("router", {{"examples", ex},
                                                        {"question", question},
                                                        {"candidates", cands},
                                                        {"last_index", std::to_string(group.rollouts.size() - 1)}}),
                          std::nullopt});
  RouteDecision d;
  d.raw = ctx.gateway.complete(std::move(req)).text;
  auto choice = parse_router_choice(d.raw);
  if (!choice || *choice >= group.rollouts.size()) {
    d.fallback = true;
    d.index = 0;
  } else {
    d.index = *choice;
  }
  if (!group.rollouts[d.index].usable()) {
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
      if (group.rollouts[i].usable()) {
        d.index = i;
        d.rerouted = true;
        break;
      }
    }
  }
  return d;
}

ParadigmExtraction extract_paradigms(const RolloutGroup& group, const std::vector<bool>& correct, std::mt19937_64& rng,
                                     LengthMetric metric, const memory::Vector& question_embedding) {
  if (correct.size() != group.rollouts.size()) throw PreconditionError("one verdict per rollout required");
  std::vector<std::size_t> succ, fail;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    if (!group.rollouts[i].usable()) continue;
    (correct[i] ? succ : fail).push_back(i);
  }
  ParadigmExtraction ex;
  for (auto i : succ) {
    if (!ex.success || group.rollouts[i].length(metric) < group.rollouts[*ex.success].length(metric)) ex.success = i;
  }
  if (!fail.empty()) ex.failure = fail[rng() % fail.size()];
  if (ex.success && ex.failure) {
    memory::MetaPlanPair pair;
    pair.question = group.question;
    pair.question_embedding = question_embedding;
    pair.success_plan = plan_text(group.rollouts[*ex.success].plan);
    pair.failed_plan = plan_text(group.rollouts[*ex.failure].plan);
    ex.pair = std::move(pair);
  }
  return ex;
}

ConsolidationReport consolidate_ttl(const ParadigmExtraction& extraction, const agent::Task& task,
                                    const RolloutGroup& group, TtlContext& ctx, bool chosen_correct) {
  ConsolidationReport rep;
  auto ids = group.context.ids();
  ctx.manager.store().record_outcome(ids, chosen_correct);
  auto store_one = [&](std::size_t i, memory::Judgment label) {
    const auto& r = group.rollouts[i];
    auto workflow = ctx.manager.compress(task, group.caption, &r.plan, r.trajectory, label);
    rep.outcomes.push_back(ctx.manager.consolidate(task, group.caption, group.bucket, std::move(workflow), label));
  };
  if (extraction.success) store_one(*extraction.success, memory::Judgment::Correct);
  if (extraction.failure) store_one(*extraction.failure, memory::Judgment::Incorrect);
  if (extraction.pair) {
    ctx.meta.add(*extraction.pair);
    rep.meta_pair_added = true;
  }
  return rep;
}

TtlStepReport ttl_step(const agent::Task& task, TtlContext& ctx, const TtlConfig& cfg, int epoch, std::size_t index) {
  TtlStepReport rep;
  rep.task_id = task.id;
  rep.epoch = epoch;
  rep.index = index;
  std::uint64_t seq = 0;

  // Everything up to the emitted answer sees the task without its gold answer.
  const agent::Task blind = task.without_gold();
  auto group = rollout_group(blind, ctx, cfg);
  rep.route = route_final(blind.question, group, ctx.meta, ctx, cfg.router_examples);
  const auto& chosen = group.rollouts[rep.route.index];
  rep.answer = chosen.usable() ? *chosen.trajectory.final_answer : std::string(agent::kUnableToDetermine);
  rep.events.push_back({seq++, "answer", rep.answer});

  std::vector<bool> correct(group.rollouts.size(), false);
  std::vector<double> rewards;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& r = group.rollouts[i];
    RolloutSummary s;
    s.plan = r.plan.steps;
    s.revision = r.plan.revision;
    s.reflection_triggered = r.plan.reflection_triggered;
    s.intermediate_answer = r.trajectory.intermediate_answer;
    s.final_answer = r.trajectory.final_answer;
    s.aborted = !r.usable();
    s.error = r.error;
    s.length = r.length(cfg.length_metric);
    if (r.usable()) {
      auto final_v = ctx.judge.evaluate(task, r.trajectory, *r.trajectory.final_answer);
      rep.events.push_back({seq++, "verdict", std::to_string(i) + (final_v.correct ? ":correct" : ":incorrect")});
      s.correct = final_v.correct;
      s.intermediate_correct = s.correct;
      if (r.plan.reflection_triggered && r.trajectory.intermediate_answer) {
        auto inter_v = ctx.judge.evaluate(task, r.trajectory.until_intermediate(), *r.trajectory.intermediate_answer);
        rep.events.push_back({seq++, "verdict", std::to_string(i) + (inter_v.correct ? ":intermediate_correct"
                                                                                       : ":intermediate_incorrect")});
        s.intermediate_correct = inter_v.correct;
      }
    }
    correct[i] = s.correct;
    s.reward = r.usable() ? rl::planner_reward(s.correct, s.intermediate_correct, s.reflection_triggered,
                                               s.intermediate_correct, rl::plan_format_reward(r.plan))
                          : rl::planner_reward(false, false, false, false, false);
    rewards.push_back(s.reward.total());
    rep.rollouts.push_back(std::move(s));
  }
  rep.correct = correct[rep.route.index];
  rep.stats = rl::group_advantages(rewards, cfg.grpo.advantage_epsilon, cfg.grpo.population_std);
  for (std::size_t i = 0; i < rep.rollouts.size(); ++i) rep.rollouts[i].advantage = rep.stats.advantages[i];

  std::seed_seq seed{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                     static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seed);
  rep.extraction = extract_paradigms(group, correct, rng, cfg.length_metric, ctx.manager.embedder().encode(blind.question));
  rep.consolidation = consolidate_ttl(rep.extraction, blind, group, ctx, rep.correct);

  rl::ExportBatch batch;
  batch.task_id = task.id;
  batch.stage = "ttl";
  batch.trainable = agent::Source::Planner;
  batch.trainable_model = ctx.gateway.model_for(agent::kPlannerAgent);
  batch.frozen_model = ctx.gateway.model_for(agent::kExecutorAgent);
  batch.config = cfg.grpo;
  batch.config.group_size = cfg.group_size;
  batch.stats = rep.stats;
  batch.metadata = {{"epoch", epoch}, {"mode", to_string(cfg.mode)}, {"chosen", rep.route.index}};
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& r = group.rollouts[i];
    const auto& s = rep.rollouts[i];
    rl::ExportRecord rec;
    rec.tokens = rl::rollout_tokens(&r.plan, r.trajectory, agent::Source::Planner);
    rec.reward = s.reward;
    rec.advantage = s.advantage;
    rec.failed = s.aborted;
    rec.facts = {{"final_correct", s.correct},
                 {"intermediate_correct", s.intermediate_correct},
                 {"reflection_triggered", s.reflection_triggered},
                 {"format_ok", s.reward.r3 == 1},
                 {"final_answer", opt_json(s.final_answer)}};
    batch.records.push_back(std::move(rec));
  }
  if (!cfg.export_dir.empty()) {
    auto stem = cfg.export_dir / fmt::format("e{}-{:04d}-{}", epoch, index, safe_name(task.id));
    rep.manifest = rl::export_training_signals(batch, stem);
    if (cfg.trainer_command) {
      auto manifest_path = stem.parent_path() / (stem.filename().string() + ".manifest.json");
      rep.trainer_model = run_trainer(*cfg.trainer_command, manifest_path);
      ctx.gateway.set_model(agent::kPlannerAgent, *rep.trainer_model);
    }
  } else {
    rl::render_export(batch);
  }
  if (cfg.selective_clear) rep.cleared = ctx.manager.store().selective_clear(cfg.clear_policy);
  return rep;
}

nlohmann::json TtlStepReport::to_json() const {
  auto rolls = nlohmann::json::array();
  for (const auto& s : rollouts) {
    rolls.push_back({{"plan", s.plan},
                     {"revision", s.revision ? nlohmann::json(*s.revision) : nlohmann::json(nullptr)},
                     {"reflection_triggered", s.reflection_triggered},
                     {"intermediate_answer", opt_json(s.intermediate_answer)},
                     {"final_answer", opt_json(s.final_answer)},
                     {"aborted", s.aborted},
                     {"error", opt_json(s.error)},
                     {"length", s.length},
                     {"correct", s.correct},
                     {"intermediate_correct", s.intermediate_correct},
                     {"reward", s.reward.to_json()},
                     {"advantage", round6(s.advantage)}});
  }
  auto cons = nlohmann::json::array();
  for (const auto& o : consolidation.outcomes) {
    cons.push_back({{"kind", o.kind == memory::ConsolidationOutcome::Kind::Replaced ? "replaced" : "inserted"},
                    {"id", o.id},
                    {"similarity", round6(o.similarity)}});
  }
  auto evs = nlohmann::json::array();
  for (const auto& e : events) evs.push_back({{"seq", e.seq}, {"kind", e.kind}, {"detail", e.detail}});
  nlohmann::json j{{"task_id", task_id},
                   {"epoch", epoch},
                   {"index", index},
                   {"answer", answer},
                   {"correct", correct},
                   {"route", {{"index", route.index}, {"fallback", route.fallback}, {"rerouted", route.rerouted}, {"raw", route.raw}}},
                   {"rollouts", rolls},
                   {"group", {{"mean", round6(stats.mean)}, {"std", round6(stats.stddev)}}},
                   {"extraction", {{"success", opt_index(extraction.success)},
                                   {"failure", opt_index(extraction.failure)},
                                   {"meta_pair", extraction.pair.has_value()}}},
                   {"consolidation", cons},
                   {"meta_pair_added", consolidation.meta_pair_added},
                   {"cleared", cleared},
                   {"events", evs}};
  j["export"] = manifest ? manifest->to_json() : nlohmann::json(nullptr);
  j["trainer_model"] = opt_json(trainer_model);
  return j;
}

std::vector<std::string> EpochSummary::metric_lines() const {
  auto p = "epoch." + std::to_string(epoch) + ".";
  return {p + "tasks=" + std::to_string(tasks),
          p + "correct=" + std::to_string(correct),
          p + rate_name() + "=" + fixed6(rate()),
          p + "memory_size=" + std::to_string(memory_size),
          p + "meta_pairs=" + std::to_string(meta_pairs),
          p + "inserted=" + std::to_string(inserted),
          p + "replaced=" + std::to_string(replaced),
          p + "router_fallbacks=" + std::to_string(router_fallbacks),
          p + "router_fallback_rate=" + fixed6(fallback_rate()),
          p + "cleared=" + std::to_string(cleared)};
}

std::string EpochSummary::line() const {
  return "epoch=" + std::to_string(epoch) + " " + rate_name() + "=" + fixed6(rate()) + " tasks=" + std::to_string(tasks) +
         " memory_size=" + std::to_string(memory_size) + " inserted=" + std::to_string(inserted) +
         " replaced=" + std::to_string(replaced) + " router_fallback_rate=" + fixed6(fallback_rate());
}

nlohmann::json EpochSummary::to_json() const {
  return {{"epoch", epoch},
          {"tasks", tasks},
          {"correct", correct},
          {rate_name(), round6(rate())},
          {"memory_size", memory_size},
          {"meta_pairs", meta_pairs},
          {"inserted", inserted},
          {"replaced", replaced},
          {"router_fallbacks", router_fallbacks},
          {"router_fallback_rate", round6(fallback_rate())},
          {"cleared", cleared}};
}

nlohmann::json RunReport::to_json() const {
  auto s = nlohmann::json::array();
  for (const auto& r : steps) s.push_back(r.to_json());
  auto e = nlohmann::json::array();
  for (const auto& r : epochs) e.push_back(r.to_json());
  return {{"steps", s}, {"epochs", e}, {"interrupted", interrupted}};
}

RunReport run_ttl(const std::vector<agent::Task>& tasks, TtlContext& ctx, const TtlConfig& cfg,
                  const RunOptions& options) {
  cfg.validate();
  RunReport report;
  if (tasks.empty()) return report;
  std::size_t steps_run = 0;
  for (int epoch = options.start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    EpochSummary summary;
    summary.epoch = epoch;
    summary.supervised = cfg.mode == JudgeMode::Supervised;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (options.stop_after_steps && steps_run >= *options.stop_after_steps) {
        report.interrupted = true;
        return report;
      }
      auto step = ttl_step(tasks[i], ctx, cfg, epoch, i);
      ++steps_run;
      ++summary.tasks;
      summary.correct += step.correct ? 1 : 0;
      summary.router_fallbacks += step.route.fallback ? 1 : 0;
      summary.cleared += step.cleared;
      for (const auto& o : step.consolidation.outcomes) {
        (o.kind == memory::ConsolidationOutcome::Kind::Replaced ? summary.replaced : summary.inserted)++;
      }
      if (options.on_step) options.on_step(step);
      report.steps.push_back(std::move(step));
    }
    summary.memory_size = ctx.manager.store().size();
    summary.meta_pairs = ctx.meta.size();
    if (options.on_epoch_end) options.on_epoch_end(summary);
    report.epochs.push_back(summary);
  }
  return report;
}

}  // namespace memplan::ttl
