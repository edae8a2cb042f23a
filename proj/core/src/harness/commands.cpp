#include "memplan/harness/commands.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "memplan/common/error.hpp"
#include "memplan/common/format.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/harness/runtime.hpp"
#include "memplan/rl/export.hpp"
#include "memplan/training/training.hpp"
#include "memplan/ttl/ttl.hpp"

namespace memplan::harness {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kTtlStateSchema = "memplan.ttl_state.v1";

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

RunConfig load_config(const CommonOptions& common) {
  auto cfg = RunConfig::load(common.config);
  if (common.mode) {
    cfg.judge_mode = ttl::judge_mode_from_string(*common.mode);
    cfg.ttl.mode = cfg.judge_mode;
  }
  return cfg;
}

std::string file_name(const std::string& id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines, bool append) {
  fs::create_directories(path.parent_path());
  std::string content = append && fs::exists(path) ? read_file(path) : std::string();
  for (const auto& l : lines) content += l + "\n";
  write_file_atomic(path, content);
}

bool uses_memory(const RunConfig& cfg) { return cfg.prompt_mode != agent::PromptMode::NoExtra; }

std::vector<agent::Task> require_tasks(const fs::path& path) {
  auto tasks = load_taskset(path);
  if (tasks.empty()) throw UserError("task file " + path.string() + " contains no tasks");
  return tasks;
}

void require_gold(const std::vector<agent::Task>& tasks) {
  for (const auto& t : tasks) {
    if (!t.gold) throw UserError("training needs gold answers; task \"" + t.id + "\" has none");
  }
}

int read_epochs_completed(const fs::path& state) {
  if (!fs::exists(state)) return 0;
  auto j = json::parse(read_file(state), nullptr, false);
  if (j.is_discarded() || j.value("schema", std::string()) != kTtlStateSchema || !j.contains("epochs_completed")) {
    throw FormatError(state.string() + ": unreadable TTL state");
  }
  return j.at("epochs_completed").get<int>();
}

}  // namespace

int cmd_episode(const EpisodeCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    if (cmd.task_id.empty()) throw UserError("episode needs --task-id");
    auto tasks = require_tasks(cmd.tasks);
    const agent::Task* task = nullptr;
    for (const auto& t : tasks) {
      if (t.id == cmd.task_id) task = &t;
    }
    if (!task) throw UserError("no task with id \"" + cmd.task_id + "\" in " + cmd.tasks.string());
    StoreLock lock(cfg.memory.store);
    Runtime rt(cfg);
    auto deps = rt.episode_deps(cfg.judge_mode, uses_memory(cfg));
    auto rec = agent::run_episode(*task, deps, rt.episode_options());
    auto path = cfg.output_dir / "episodes" / (file_name(task->id) + ".json");
    write_json(path, rec.to_json());
    if (cfg.memory.update_on_episode && uses_memory(cfg)) rt.save_store();
    out << "task=" << task->id << "\n";
    out << "answer=" << rec.trajectory.final_answer.value_or(agent::kUnableToDetermine) << "\n";
    out << "judge=" << rt.judge(cfg.judge_mode).name() << "\n";
    out << "correct=" << (rec.correct ? "true" : "false") << "\n";
    out << "record=" << path.string() << "\n";
    if (rec.error) {
      err << "runtime error: " << *rec.error << "\n";
      return kExitRuntimeError;
    }
    return kExitOk;
  });
}

int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    auto tasks = require_tasks(cmd.tasks);
    StoreLock lock(cfg.memory.store);
    Runtime rt(cfg);
    auto deps = rt.episode_deps(cfg.judge_mode, uses_memory(cfg));
    auto options = rt.episode_options();

    struct Tally {
      std::size_t tasks = 0, correct = 0;
    };
    Tally all;
    std::size_t errors = 0;
    std::map<std::string, Tally> by_category;
    std::vector<json> records;
    auto per_task = json::array();
    for (const auto& task : tasks) {
      auto rec = agent::run_episode(task, deps, options);
      auto& cat = by_category[task.category.value_or("general")];
      ++all.tasks;
      ++cat.tasks;
      if (rec.correct) {
        ++all.correct;
        ++cat.correct;
      }
      if (rec.error) ++errors;
      per_task.push_back({{"id", task.id},
                          {"answer", rec.trajectory.final_answer.value_or(agent::kUnableToDetermine)},
                          {"correct", rec.correct},
                          {"error", rec.error ? json(*rec.error) : json(nullptr)}});
      records.push_back(rec.to_json());
    }
    if (cfg.memory.update_on_episode && uses_memory(cfg)) rt.save_store();

    const std::string rate = cfg.judge_mode == ttl::JudgeMode::Supervised ? "accuracy" : "acceptance_rate";
    auto ratio = [](const Tally& t) { return t.tasks ? static_cast<double>(t.correct) / static_cast<double>(t.tasks) : 0.0; };
    std::vector<std::string> lines{"eval.tasks=" + std::to_string(all.tasks), "eval.correct=" + std::to_string(all.correct),
                                   "eval." + rate + "=" + fixed6(ratio(all)), "eval.errors=" + std::to_string(errors)};
    auto cats = json::object();
    for (const auto& [name, t] : by_category) {
      lines.push_back("eval.category." + name + ".tasks=" + std::to_string(t.tasks));
      lines.push_back("eval.category." + name + "." + rate + "=" + fixed6(ratio(t)));
      cats[name] = {{"tasks", t.tasks}, {"correct", t.correct}, {rate, std::stod(fixed6(ratio(t)))}};
    }
    json summary{{"tasks", all.tasks},
                 {"correct", all.correct},
                 {rate, std::stod(fixed6(ratio(all)))},
                 {"errors", errors},
                 {"judge", rt.judge(cfg.judge_mode).name()},
                 {"prompt_mode", agent::to_string(cfg.prompt_mode)},
                 {"categories", cats},
                 {"results", per_task}};
    write_json(cfg.output_dir / "eval_summary.json", summary);
    write_file_atomic(cfg.output_dir / "eval_records.jsonl", dump_jsonl(records));
    write_lines(cfg.output_dir / "eval_metrics.txt", lines, false);
    for (const auto& l : lines) out << l << "\n";
    out << "summary=" << (cfg.output_dir / "eval_summary.json").string() << "\n";
    return kExitOk;
  });
}

int cmd_ttl(const TtlCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    auto tasks = require_tasks(cmd.tasks);
    if (cfg.judge_mode == ttl::JudgeMode::Supervised) {
      for (const auto& t : tasks) {
        if (!t.gold) throw UserError("supervised TTL needs gold answers; task \"" + t.id + "\" has none");
      }
    }
    StoreLock lock(cfg.memory.store);
    const auto state_path = cfg.output_dir / "ttl_state.json";
    const int done = read_epochs_completed(state_path);
    if (done >= cfg.ttl.epochs) {
      out << "epochs_completed=" << done << " (nothing to run)\n";
      return kExitOk;
    }
    Runtime rt(cfg);
    ttl::TtlContext ctx{rt.gateway(), rt.prompts(), rt.tools(), rt.manager(), rt.meta(), rt.judge(cfg.judge_mode),
                        &rt.captioner()};
    ttl::RunOptions options;
    options.start_epoch = done;
    options.stop_after_steps = cmd.stop_after_steps;
    options.on_epoch_end = [&](const ttl::EpochSummary& s) {
      rt.save_store();
      rt.save_meta();
      write_json(state_path, {{"schema", kTtlStateSchema}, {"epochs_completed", s.epoch}});
      write_lines(cfg.output_dir / "ttl_metrics.txt", s.metric_lines(), s.epoch > 1);
      write_json(cfg.output_dir / fmt::format("ttl_epoch{}.json", s.epoch), s.to_json());
      out << s.line() << "\n";
    };
    auto report = ttl::run_ttl(tasks, ctx, cfg.ttl, options);
    auto path = cfg.output_dir / (report.interrupted ? "ttl_report.partial.json" : "ttl_report.json");
    write_json(path, report.to_json());
    if (report.interrupted) {
      out << "interrupted after " << report.steps.size() << " steps; epochs_completed="
          << read_epochs_completed(state_path) << "\n";
    }
    out << "report=" << path.string() << "\n";
    return kExitOk;
  });
}

int cmd_mem(const MemCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    StoreLock lock(cfg.memory.store);
    auto store = memory::MemoryStore::load_or_empty(cfg.memory.store);
    if (cmd.action == "inspect") {
      if (cmd.json) {
        for (const auto& u : store.units()) out << u.to_json().dump() << "\n";
        return kExitOk;
      }
      out << fmt::format("{:>6}  {:<20}  {:<9}  {:>5}  {:>7}  {:>8}  {:>9}  {}\n", "id", "bucket", "label", "usage",
                         "success", "value", "frequency", "question");
      for (const auto& u : store.units()) {
        auto q = u.question.size() > 60 ? u.question.substr(0, 57) + "..." : u.question;
        out << fmt::format("{:>6}  {:<20}  {:<9}  {:>5}  {:>7}  {:>8}  {:>9}  {}\n", u.id, u.bucket.str(),
                           memory::to_string(u.label), u.usage, u.success, fixed6(u.value()), fixed6(u.frequency()), q);
      }
      return kExitOk;
    }
    if (cmd.action == "score") {
      if (cmd.question.empty()) throw UserError("mem score needs --question");
      Runtime rt(cfg);
      auto bucket = cmd.bucket ? memory::BucketKey::parse(*cmd.bucket) : memory::BucketKey{};
      auto query = memory::Query::encode(*rt.embedder(), cmd.question,
                                         cmd.caption ? std::optional<std::string_view>(*cmd.caption) : std::nullopt);
      const auto& rc = cfg.memory.manager.retrieval;
      auto rows = store.score_all(query, bucket, rc);
      if (cmd.json) {
        for (const auto& r : rows) {
          out << json{{"id", r.id},
                      {"sim_question", r.sim_question},
                      {"sim_caption", r.sim_caption ? json(*r.sim_caption) : json(nullptr)},
                      {"similarity", r.similarity},
                      {"similarity_normalized", r.similarity_normalized},
                      {"value", r.value},
                      {"frequency", r.frequency},
                      {"score", r.score},
                      {"weights",
                       {{"similarity", rc.lambda_similarity}, {"value", rc.lambda_value}, {"frequency", rc.lambda_frequency}}}}
                     .dump()
              << "\n";
        }
        return kExitOk;
      }
      out << fmt::format("{:>6}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n", "id", "sim_q", "sim_c", "sim",
                         "sim_norm", "value", "frequency", "score");
      for (const auto& r : rows) {
        out << fmt::format("{:>6}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n", r.id, fixed6(r.sim_question),
                           r.sim_caption ? fixed6(*r.sim_caption) : std::string("-"), fixed6(r.similarity),
                           fixed6(r.similarity_normalized), fixed6(r.value), fixed6(r.frequency), fixed6(r.score));
      }
      return kExitOk;
    }
    if (cmd.action == "clear") {
      std::vector<memory::UnitId> ids;
      for (const auto& u : store.units()) {
        if (cfg.memory.clear_policy.matches(u)) ids.push_back(u.id);
      }
      auto n = store.selective_clear(cfg.memory.clear_policy, cmd.dry_run);
      for (auto id : ids) out << (cmd.dry_run ? "would_clear=" : "cleared=") << id << "\n";
      out << "matched=" << n << " dry_run=" << (cmd.dry_run ? "true" : "false") << "\n";
      if (!cmd.dry_run && n > 0) store.save(cfg.memory.store);
      return kExitOk;
    }
    throw UserError("unknown mem action \"" + cmd.action + "\" (inspect, score, clear)");
  });
}

int cmd_stage1(const StageCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    auto tasks = require_tasks(cmd.tasks);
    require_gold(tasks);
    Runtime rt(cfg);
    training::StageConfig sc = cfg.training;
    sc.stage = training::Stage::Executor;
    sc.export_dir = cfg.output_dir / "exports" / "stage1";
    training::StageContext ctx{rt.gateway(), rt.prompts(), rt.tools(), rt.judge(ttl::JudgeMode::Supervised),
                               &rt.captioner()};
    auto results = json::array();
    for (const auto& t : tasks) {
      auto res = training::stage1_rollout(t, ctx, sc);
      out << "task=" << t.id << " mean_reward=" << fixed6(res.stats.mean) << " std=" << fixed6(res.stats.stddev)
          << " manifest=" << (sc.export_dir / (std::string("executor-") + file_name(t.id) + ".manifest.json")).string()
          << "\n";
      results.push_back(res.to_json());
    }
    write_json(cfg.output_dir / "stage1_report.json", {{"stage", "executor"}, {"results", results}});
    return kExitOk;
  });
}

int cmd_collect_contexts(const StageCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    auto tasks = require_tasks(cmd.tasks);
    require_gold(tasks);
    auto archive = cmd.archive.empty() ? cfg.output_dir / "contexts.jsonl" : cmd.archive;
    if (fs::exists(archive)) throw UserError("context archive " + archive.string() + " already exists");
    StoreLock lock(cfg.memory.store);
    Runtime rt(cfg);
    auto deps = rt.episode_deps(ttl::JudgeMode::Supervised, true);
    auto options = rt.episode_options();
    options.mode = agent::PromptMode::Guideline;
    options.consolidate = true;
    auto contexts = training::collect_stage2_contexts(tasks, deps, options, archive);
    rt.save_store();
    for (const auto& c : contexts) {
      out << "task=" << c.task_id << " positives=" << c.context.positives.size()
          << " negatives=" << c.context.negatives.size() << "\n";
    }
    out << "contexts=" << contexts.size() << " archive=" << archive.string() << "\n";
    return kExitOk;
  });
}

int cmd_stage2(const StageCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = load_config(cmd.common);
    auto tasks = require_tasks(cmd.tasks);
    require_gold(tasks);
    auto archive = cmd.archive.empty() ? cfg.output_dir / "contexts.jsonl" : cmd.archive;
    if (!fs::exists(archive)) throw UserError("context archive not found: " + archive.string());
    std::map<std::string, training::ArchivedContext> by_id;
    for (auto& c : training::load_context_archive(archive)) by_id.emplace(c.task_id, std::move(c));
    Runtime rt(cfg);
    training::StageConfig sc = cfg.training;
    sc.stage = training::Stage::Planner;
    sc.export_dir = cfg.output_dir / "exports" / "stage2";
    training::StageContext ctx{rt.gateway(), rt.prompts(), rt.tools(), rt.judge(ttl::JudgeMode::Supervised),
                               &rt.captioner()};
    auto results = json::array();
    for (const auto& t : tasks) {
      auto it = by_id.find(t.id);
      if (it == by_id.end()) throw UserError("no archived context for task \"" + t.id + "\"");
      auto res = training::stage2_rollout(t, it->second, ctx, sc);
      out << "task=" << t.id << " mean_reward=" << fixed6(res.stats.mean) << " std=" << fixed6(res.stats.stddev)
          << " manifest=" << (sc.export_dir / (std::string("planner-") + file_name(t.id) + ".manifest.json")).string()
          << "\n";
      results.push_back(res.to_json());
    }
    write_json(cfg.output_dir / "stage2_report.json", {{"stage", "planner"}, {"results", results}});
    return kExitOk;
  });
}

int cmd_export_verify(const VerifyCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.manifests.empty()) throw UserError("export-verify needs at least one manifest");
    bool ok = true;
    for (const auto& m : cmd.manifests) {
      if (!fs::exists(m)) throw UserError("manifest not found: " + m.string());
      auto rep = rl::verify_export(m);
      if (rep.ok()) {
        out << "ok " << m.string() << " records=" << rep.records << "\n";
      } else {
        ok = false;
        out << "FAILED " << m.string() << "\n";
        for (const auto& p : rep.problems) out << "  " << p << "\n";
      }
    }
    return ok ? kExitOk : kExitUserError;
  });
}

}  // namespace memplan::harness
