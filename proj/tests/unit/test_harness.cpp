#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <sys/wait.h>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/harness/config.hpp"
#include "memplan/harness/runtime.hpp"
#include "memplan/memory/memory_store.hpp"
#include "support.hpp"

using namespace memplan;
using namespace memplan::harness;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = MEMPLAN_FIXTURE_DIR;
const fs::path kCliFixtures = kFixtures / "cli";

json scripted_config(const fs::path& script = kCliFixtures / "script.jsonl") {
  return {{"backend", {{"kind", "scripted"}, {"script", script.string()}}},
          {"agents", {{"planner", {{"model", "planner-model"}}}, {"executor", {{"model", "executor-model"}}}}},
          {"tools", {{"corpus", (kCliFixtures / "corpus.jsonl").string()}}},
          {"memory",
           {{"store", "state/memory.jsonl"},
            {"meta_store", "state/meta.jsonl"},
            {"update_on_episode", true},
            {"clear_policy", {{"label", "incorrect"}, {"max_value", 0.5}, {"min_usage", 0}}}}},
          {"ttl", {{"group_size", 2}, {"epochs", 2}}},
          {"training", {{"group_size", 2}}},
          {"output_dir", "out"}};
}

fs::path write_config(const testkit::TempDir& dir, const json& j, const std::string& name = "config.json") {
  auto p = dir / name;
  write_file_atomic(p, j.dump(2));
  return p;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quoted(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

CliResult run_cli(const std::vector<std::string>& args, const fs::path& err_file) {
  std::string cmd = quoted(MEMPLAN_CLI_PATH);
  for (const auto& a : args) cmd += " " + quoted(a);
  cmd += " 2>" + quoted(err_file.string());
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = fs::exists(err_file) ? read_file(err_file) : std::string();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  CliResult run(std::vector<std::string> args) { return run_cli(args, dir / "stderr.txt"); }
  CliResult run_with_config(const std::string& sub, std::vector<std::string> rest) {
    std::vector<std::string> args{sub, "-c", config.string()};
    args.insert(args.end(), rest.begin(), rest.end());
    return run(args);
  }
  std::string tasks() const { return (kCliFixtures / "tasks.jsonl").string(); }

  void SetUp() override { config = write_config(dir, scripted_config()); }

  testkit::TempDir dir;
  fs::path config;
};

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, DefaultConfigCarriesRetrievalWeights) {
  auto cfg = RunConfig::load(kFixtures / ".." / ".." / "configs" / "default.json");
  const auto& rc = cfg.memory.manager.retrieval;
  EXPECT_EQ(rc.alpha_question, 0.8);
  EXPECT_EQ(rc.alpha_caption, 0.2);
  EXPECT_EQ(rc.lambda_similarity, 0.7);
  EXPECT_EQ(rc.lambda_value, 0.3);
  EXPECT_EQ(rc.lambda_frequency, 0.3);
  EXPECT_EQ(rc.k_positive, 2u);
  EXPECT_EQ(rc.k_negative, 1u);
  EXPECT_EQ(rc.norm_epsilon, 1e-8);
  EXPECT_EQ(cfg.backend.kind, "http");
  EXPECT_EQ(cfg.grpo.clip, 0.2);
  EXPECT_EQ(cfg.training.group_size, 8u);
  EXPECT_EQ(cfg.training.rollout_temperature, 1.0);
  EXPECT_EQ(cfg.ttl.epochs, 2);
  EXPECT_TRUE(cfg.memory.store.is_absolute());
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  testkit::TempDir dir;
  auto base = scripted_config();
  EXPECT_NO_THROW(RunConfig::from_json(base, dir.path()));

  auto bad = [&](auto mutate, const std::string& needle) {
    auto j = base;
    mutate(j);
    try {
      RunConfig::from_json(j, dir.path());
      ADD_FAILURE() << "accepted config needing " << needle;
    } catch (const UserError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  bad([](json& j) { j["unexpected"] = 1; }, "unexpected");
  bad([](json& j) { j["memory"]["stor"] = "x"; }, "config.memory: unknown key \"stor\"");
  bad([](json& j) { j["retrieval"] = {{"lambda_value", "high"}}; }, "config.retrieval.lambda_value");
  bad([](json& j) { j["retrieval"] = {{"k_positive", -1}}; }, "k_positive");
  bad([](json& j) { j["backend"]["script"] = "missing.jsonl"; }, "path does not exist");
  bad([](json& j) { j["backend"]["kind"] = "grpc"; }, "config.backend.kind");
  bad([](json& j) { j.erase("backend"); }, "\"backend\" is required");
  bad([](json& j) { j["backend"] = {{"kind", "http"}}; }, "base_url");
  bad([](json& j) { j["agents"]["planner"]["temperature"] = 1; }, "config.agents.planner");
  bad([](json& j) { j["memory"]["replace_threshold"] = 1.5; }, "replace_threshold");
  bad([](json& j) { j["ttl"]["length_metric"] = "seconds"; }, "length metric");
  bad([](json& j) { j["tools"]["budget"] = 0; }, "config.tools");
  bad([](json& j) { j["prompt_mode"] = "verbose"; }, "verbose");

  EXPECT_THROW(RunConfig::load(dir / "nope.json"), UserError);
  write_file_atomic(dir / "broken.json", "{not json");
  EXPECT_THROW(RunConfig::load(dir / "broken.json"), UserError);
}

TEST(Config, ResolvesRelativePathsAgainstConfigDir) {
  testkit::TempDir dir;
  auto cfg = RunConfig::load(write_config(dir, scripted_config()));
  EXPECT_EQ(cfg.memory.store, (fs::absolute(dir.path()) / "state" / "memory.jsonl").lexically_normal());
  EXPECT_EQ(cfg.output_dir, (fs::absolute(dir.path()) / "out").lexically_normal());
  EXPECT_EQ(cfg.ttl.export_dir, cfg.output_dir / "exports" / "ttl");
  EXPECT_EQ(cfg.ttl.group_size, 2u);
  EXPECT_FALSE(cfg.memory.clear_policy.matches([] {
    memory::MemoryUnit u;
    u.label = memory::Judgment::Correct;
    return u;
  }()));
}

TEST(Taskset, LoadsAndRejects) {
  testkit::TempDir dir;
  auto tasks = load_taskset(kCliFixtures / "tasks.jsonl");
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].gold, "1874");
  EXPECT_EQ(tasks[1].category, "engineering");

  write_file_atomic(dir / "alias.jsonl", "{\"id\": 7, \"question\": \"q\", \"answer\": \"a\", \"image\": \"img.png\"}\n");
  auto alias = load_taskset(dir / "alias.jsonl");
  EXPECT_EQ(alias[0].id, "7");
  EXPECT_EQ(alias[0].gold, "a");
  EXPECT_EQ(fs::path(*alias[0].image), (fs::absolute(dir.path()) / "img.png").lexically_normal());

  write_file_atomic(dir / "dup.jsonl", "{\"id\": \"a\", \"question\": \"q\"}\n{\"id\": \"a\", \"question\": \"r\"}\n");
  EXPECT_THROW(load_taskset(dir / "dup.jsonl"), UserError);
  write_file_atomic(dir / "extra.jsonl", "{\"id\": \"a\", \"question\": \"q\", \"hint\": \"x\"}\n");
  EXPECT_THROW(load_taskset(dir / "extra.jsonl"), UserError);
  write_file_atomic(dir / "both.jsonl", "{\"id\": \"a\", \"question\": \"q\", \"gold\": \"x\", \"answer\": \"y\"}\n");
  EXPECT_THROW(load_taskset(dir / "both.jsonl"), UserError);
  write_file_atomic(dir / "garbage.jsonl", "{\"id\": \"a\", \"question\": \"q\"}\nnot json\n");
  EXPECT_THROW(load_taskset(dir / "garbage.jsonl"), UserError);
  EXPECT_THROW(load_taskset(dir / "absent.jsonl"), UserError);
}

TEST(StoreLockTest, ExclusiveWhileHeld) {
  testkit::TempDir dir;
  auto store = dir / "memory.jsonl";
  {
    StoreLock first(store);
    EXPECT_THROW(StoreLock second(store), UserError);
  }
  EXPECT_NO_THROW(StoreLock again(store));
}

TEST_F(Cli, EpisodeWritesRecord) {
  auto r = run_with_config("episode", {"-t", tasks(), "--task-id", "lh"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = lines_of(r.out);
  EXPECT_EQ(out[0], "task=lh");
  EXPECT_EQ(out[1], "answer=1874");
  EXPECT_EQ(out[3], "correct=true");
  auto rec = json::parse(read_file(dir / "out" / "episodes" / "lh.json"));
  EXPECT_EQ(rec.dump().find("\"gold\""), std::string::npos);

  auto missing = run_with_config("episode", {"-t", tasks(), "--task-id", "zz"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("no task with id"), std::string::npos);
}

TEST_F(Cli, EvalReportsAccuracy) {
  auto r = run_with_config("eval", {"-t", tasks()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = lines_of(r.out);
  EXPECT_EQ(out[0], "eval.tasks=2");
  EXPECT_EQ(out[1], "eval.correct=1");
  EXPECT_EQ(out[2], "eval.accuracy=0.500000");
  EXPECT_EQ(out[3], "eval.errors=0");
  auto summary = json::parse(read_file(dir / "out" / "eval_summary.json"));
  EXPECT_EQ(summary["categories"]["history"]["accuracy"], 1.0);
  EXPECT_EQ(summary["categories"]["engineering"]["accuracy"], 0.0);
  EXPECT_EQ(read_jsonl(dir / "out" / "eval_records.jsonl").size(), 2u);
  EXPECT_EQ(memory::MemoryStore::load(dir / "state" / "memory.jsonl").size(), 2u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"eval", "-c", (dir / "absent.json").string(), "-t", tasks()}).code, 1);
  EXPECT_EQ(run({"eval"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);

  auto j = scripted_config();
  j["surprise"] = true;
  auto bad = run({"eval", "-c", write_config(dir, j, "bad.json").string(), "-t", tasks()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("unknown key \"surprise\""), std::string::npos);

  // A strict script without executor rules: the episode aborts at runtime.
  write_file_atomic(dir / "thin.jsonl", "{\"agent\": \"planner\", \"response\": \"<plan>\\n1. look\\n</plan>\"}\n");
  auto thin = run({"episode", "-c", write_config(dir, scripted_config(dir / "thin.jsonl"), "thin.json").string(), "-t",
                   tasks(), "--task-id", "lh"});
  EXPECT_EQ(thin.code, 2);
  EXPECT_NE(thin.err.find("runtime error"), std::string::npos);

  StoreLock held(dir / "state" / "memory.jsonl");
  auto locked = run_with_config("mem", {"inspect"});
  EXPECT_EQ(locked.code, 1);
  EXPECT_NE(locked.err.find("in use"), std::string::npos);
}

TEST_F(Cli, TtlResumesAfterInterruption) {
  auto first = run_with_config("ttl", {"-t", tasks(), "--stop-after-steps", "3"});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_NE(first.out.find("interrupted after 3 steps; epochs_completed=1"), std::string::npos) << first.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "ttl_report.partial.json"));
  auto state = json::parse(read_file(dir / "out" / "ttl_state.json"));
  EXPECT_EQ(state["epochs_completed"], 1);
  auto store_after_one = read_file(dir / "state" / "memory.jsonl");

  auto second = run_with_config("ttl", {"-t", tasks()});
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "ttl_report.json"));
  auto report = json::parse(read_file(dir / "out" / "ttl_report.json"));
  EXPECT_EQ(report["steps"].size(), 2u);
  EXPECT_EQ(json::parse(read_file(dir / "out" / "ttl_state.json"))["epochs_completed"], 2);
  EXPECT_TRUE(fs::exists(dir / "out" / "ttl_epoch2.json"));
  EXPECT_NE(read_file(dir / "state" / "memory.jsonl"), store_after_one);

  auto third = run_with_config("ttl", {"-t", tasks()});
  EXPECT_EQ(third.code, 0);
  EXPECT_NE(third.out.find("nothing to run"), std::string::npos);

  auto manifests = std::vector<std::string>{"export-verify"};
  for (const auto& e : fs::directory_iterator(dir / "out" / "exports" / "ttl")) {
    if (e.path().string().ends_with(".manifest.json")) manifests.push_back(e.path().string());
  }
  ASSERT_GT(manifests.size(), 1u);
  auto verify = run(manifests);
  EXPECT_EQ(verify.code, 0) << verify.out;
}

TEST_F(Cli, MemCommands) {
  ASSERT_EQ(run_with_config("eval", {"-t", tasks()}).code, 0);
  const auto store_path = dir / "state" / "memory.jsonl";

  auto inspect = run_with_config("mem", {"inspect", "--json"});
  ASSERT_EQ(inspect.code, 0) << inspect.err;
  auto units = lines_of(inspect.out);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(json::parse(units[0])["bucket"].get<std::string>().empty(), false);
  auto table = run_with_config("mem", {"inspect"});
  EXPECT_EQ(lines_of(table.out).size(), 3u);

  auto score = run_with_config("mem", {"score", "-q", "When was the Harbor Lighthouse completed?", "--bucket",
                                       "text/history", "--json"});
  ASSERT_EQ(score.code, 0) << score.err;
  auto rows = lines_of(score.out);
  ASSERT_EQ(rows.size(), 1u);
  auto row = json::parse(rows[0]);
  EXPECT_DOUBLE_EQ(row["score"].get<double>(), 0.7 * row["similarity_normalized"].get<double>() +
                                                   0.3 * row["value"].get<double>() +
                                                   0.3 * row["frequency"].get<double>());
  EXPECT_EQ(row["weights"]["similarity"], 0.7);
  EXPECT_EQ(run_with_config("mem", {"score"}).code, 1);
  EXPECT_EQ(run_with_config("mem", {"score", "-q", "x", "--bucket", "nonsense"}).code, 1);

  const auto before = read_file(store_path);
  auto dry1 = run_with_config("mem", {"clear", "--dry-run"});
  auto dry2 = run_with_config("mem", {"clear", "--dry-run"});
  ASSERT_EQ(dry1.code, 0) << dry1.err;
  EXPECT_EQ(dry1.out, dry2.out);
  EXPECT_EQ(read_file(store_path), before);
  EXPECT_NE(dry1.out.find("would_clear="), std::string::npos);
  EXPECT_NE(dry1.out.find("matched=1 dry_run=true"), std::string::npos);

  auto clear = run_with_config("mem", {"clear"});
  EXPECT_NE(clear.out.find("matched=1 dry_run=false"), std::string::npos);
  EXPECT_EQ(memory::MemoryStore::load(store_path).size(), 1u);
  auto after = run_with_config("mem", {"clear", "--dry-run"});
  EXPECT_EQ(after.out, "matched=0 dry_run=true\n");
}

TEST_F(Cli, TrainingStagesExportVerifiably) {
  auto s1 = run_with_config("stage1", {"-t", tasks()});
  ASSERT_EQ(s1.code, 0) << s1.err;
  auto lines = lines_of(s1.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_NE(lines[0].find("task=lh mean_reward="), std::string::npos);
  auto manifest = dir / "out" / "exports" / "stage1" / "executor-lh.manifest.json";
  ASSERT_TRUE(fs::exists(manifest));
  auto ok = run({"export-verify", manifest.string()});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("ok "), std::string::npos);

  auto data = dir / "out" / "exports" / "stage1" / "executor-lh.jsonl";
  auto content = read_file(data);
  content[content.size() / 2] = content[content.size() / 2] == 'a' ? 'b' : 'a';
  write_file_atomic(data, content);
  auto tampered = run({"export-verify", manifest.string()});
  EXPECT_EQ(tampered.code, 1);
  EXPECT_NE(tampered.out.find("FAILED"), std::string::npos);
  EXPECT_EQ(run({"export-verify", (dir / "none.manifest.json").string()}).code, 1);

  auto cc = run_with_config("collect-contexts", {"-t", tasks()});
  ASSERT_EQ(cc.code, 0) << cc.err;
  EXPECT_NE(cc.out.find("contexts=2"), std::string::npos);
  EXPECT_EQ(run_with_config("collect-contexts", {"-t", tasks()}).code, 1);

  auto s2 = run_with_config("stage2", {"-t", tasks()});
  ASSERT_EQ(s2.code, 0) << s2.err;
  auto planner = dir / "out" / "exports" / "stage2" / "planner-br.manifest.json";
  EXPECT_EQ(run({"export-verify", planner.string()}).code, 0);
  EXPECT_EQ(run_with_config("stage2", {"-t", tasks(), "--archive", (dir / "missing.jsonl").string()}).code, 1);
}
