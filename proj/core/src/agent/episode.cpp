#include "memplan/agent/episode.hpp"

#include "memplan/common/error.hpp"

namespace memplan::agent {

namespace {

nlohmann::json opt_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

}  // namespace

std::optional<std::string> caption_for(const Task& task, gateway::Captioner* captioner) {
  if (!task.image || !captioner) return std::nullopt;
  const auto& src = *task.image;
  bool remote = src.rfind("http://", 0) == 0 || src.rfind("https://", 0) == 0;
  return captioner->caption(remote ? gateway::ImageRef::from_url(src) : gateway::ImageRef::from_file(src));
}

nlohmann::json EpisodeRecord::to_json() const {
  auto mem = nlohmann::json::array();
  for (const auto& m : memory) {
    mem.push_back({{"id", m.id}, {"label", memory::to_string(m.label)}, {"workflow", m.workflow}});
  }
  nlohmann::json j{{"task_id", task_id},
                   {"mode", to_string(mode)},
                   {"caption", opt_json(caption)},
                   {"bucket", opt_json(bucket)},
                   {"memory", mem},
                   {"plan", plan ? plan->to_json() : nlohmann::json(nullptr)},
                   {"trajectory", trajectory.to_json()},
                   {"intermediate_verdict", intermediate_verdict ? intermediate_verdict->to_json() : nlohmann::json(nullptr)},
                   {"final_verdict", final_verdict ? final_verdict->to_json() : nlohmann::json(nullptr)},
                   {"correct", correct},
                   {"reflection_triggered", reflection_triggered()},
                   {"error", opt_json(error)}};
  if (consolidation) {
    j["consolidation"] = {
        {"kind", consolidation->kind == memory::ConsolidationOutcome::Kind::Replaced ? "replaced" : "inserted"},
        {"id", consolidation->id},
        {"similarity", consolidation->similarity}};
  } else {
    j["consolidation"] = nullptr;
  }
  return j;
}

EpisodeRecord EpisodeRecord::from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.mode = prompt_mode_from_string(j.at("mode").get<std::string>());
  r.caption = opt_string(j, "caption");
  r.bucket = opt_string(j, "bucket");
  for (const auto& m : j.at("memory")) {
    r.memory.push_back({m.at("id").get<memory::UnitId>(), memory::judgment_from_string(m.at("label").get<std::string>()),
                        m.at("workflow").get<std::string>()});
  }
  if (!j.at("plan").is_null()) r.plan = Plan::from_json(j["plan"]);
  r.trajectory = Trajectory::from_json(j.at("trajectory"));
  if (!j.at("intermediate_verdict").is_null()) {
    r.intermediate_verdict = judging::CorrectnessVerdict::from_json(j["intermediate_verdict"]);
  }
  if (!j.at("final_verdict").is_null()) r.final_verdict = judging::CorrectnessVerdict::from_json(j["final_verdict"]);
  r.correct = j.at("correct").get<bool>();
  r.error = opt_string(j, "error");
  if (!j.at("consolidation").is_null()) {
    const auto& c = j["consolidation"];
    memory::ConsolidationOutcome o;
    o.kind = c.at("kind").get<std::string>() == "replaced" ? memory::ConsolidationOutcome::Kind::Replaced
                                                             : memory::ConsolidationOutcome::Kind::Inserted;
    o.id = c.at("id").get<memory::UnitId>();
    o.similarity = c.at("similarity").get<double>();
    r.consolidation = o;
  }
  return r;
}

EpisodeRecord run_episode(const Task& task, EpisodeDeps& deps, const EpisodeOptions& options) {
  EpisodeRecord rec;
  rec.task_id = task.id;
  rec.mode = options.mode;
  const Task blind = task.without_gold();
  try {
    rec.caption = caption_for(task, deps.captioner);

    const bool use_memory = deps.manager && options.mode != PromptMode::NoExtra;
    memory::BucketKey bucket;
    memory::MemoryContext context;
    if (use_memory) {
      bucket = deps.manager->bucket_for(blind);
      rec.bucket = bucket.str();
      context = options.preset_context ? *options.preset_context : deps.manager->retrieve(blind, rec.caption, bucket);
      for (const auto* side : {&context.positives, &context.negatives}) {
        for (const auto& u : *side) rec.memory.push_back({u.id, u.label, u.workflow});
      }
    }

    Planner planner(deps.gateway, deps.prompts);
    if (options.mode == PromptMode::Guideline) {
      rec.plan = planner.make_plan(blind, rec.caption, context, options.plan_temperature);
    }
    auto prefix = executor_prefix(options.mode, deps.prompts, rec.plan ? &*rec.plan : nullptr, &context);
    ExecutorSession session(deps.gateway, deps.prompts, deps.tools, blind, prefix, options.executor);
    session.run();
    rec.trajectory = session.trajectory();
    if (rec.trajectory.aborted) {
      rec.error = rec.trajectory.abort_reason;
      return rec;
    }

    auto verdict = deps.judge.evaluate(task, rec.trajectory.until_intermediate(), *rec.trajectory.intermediate_answer);
    rec.intermediate_verdict = verdict;
    if (rec.plan && options.reflection && !verdict.correct && session.turns_left() &&
        planner.reflect_replan(blind, rec.caption, *rec.plan, rec.trajectory, false)) {
      session.inject_plan(rec.plan->render_revision(), *rec.plan->reflection);
      session.run();
      rec.trajectory = session.trajectory();
      if (rec.trajectory.aborted) {
        rec.error = rec.trajectory.abort_reason;
        return rec;
      }
      verdict = deps.judge.evaluate(task, rec.trajectory, *rec.trajectory.final_answer);
    }
    rec.final_verdict = verdict;
    rec.correct = verdict.correct;

    if (use_memory && options.consolidate) {
      auto label = rec.correct ? memory::Judgment::Correct : memory::Judgment::Incorrect;
      auto ids = context.ids();
      deps.manager->store().record_outcome(ids, rec.correct);
      auto workflow = deps.manager->compress(blind, rec.caption, rec.plan ? &*rec.plan : nullptr, rec.trajectory, label);
      rec.consolidation = deps.manager->consolidate(blind, rec.caption, bucket, std::move(workflow), label);
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

}  // namespace memplan::agent
