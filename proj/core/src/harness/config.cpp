#include "memplan/harness/config.hpp"

#include <cstdlib>
#include <set>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"

namespace memplan::harness {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Reads one JSON object, rejecting keys outside `allowed`.
class Reader {
 public:
  Reader(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UserError(where_ + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) throw UserError(where_ + ": unknown key \"" + k + "\"");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string where(const char* key) const { return where_ + "." + key; }

  void get(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) fail(key, "a string");
    out = j_.at(key).get<std::string>();
  }
  void get(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) fail(key, "a boolean");
    out = j_.at(key).get<bool>();
  }
  void get(const char* key, double& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) fail(key, "a number");
    out = j_.at(key).get<double>();
  }
  void get(const char* key, std::size_t& out) const {
    if (!has(key)) return;
    require_count(key);
    out = j_.at(key).get<std::size_t>();
  }
  void get(const char* key, std::uint64_t& out, int) const {
    if (!has(key)) return;
    require_count(key);
    out = j_.at(key).get<std::uint64_t>();
  }
  void get(const char* key, int& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) fail(key, "an integer");
    out = j_.at(key).get<int>();
  }
  void get(const char* key, std::vector<std::string>& out) const {
    if (!has(key)) return;
    const auto& a = j_.at(key);
    if (!a.is_array()) fail(key, "an array of strings");
    out.clear();
    for (const auto& v : a) {
      if (!v.is_string()) fail(key, "an array of strings");
      out.push_back(v.get<std::string>());
    }
  }

 private:
  void require_count(const char* key) const {
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(key, "a non-negative integer");
    }
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw UserError(where(key) + ": expected " + what);
  }

  const json& j_;
  std::string where_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

fs::path existing(const fs::path& base, const std::string& p, const std::string& where) {
  auto path = resolve(base, p);
  if (!fs::exists(path)) throw UserError(where + ": path does not exist: " + path.string());
  return path;
}

BackendSpec read_backend(const json& j, const std::string& where, const fs::path& base) {
  Reader r(j, where, {"kind", "script", "strict", "logprobs", "base_url", "path", "api_key_env", "timeout_seconds"});
  BackendSpec b;
  r.get("kind", b.kind);
  r.get("strict", b.strict);
  r.get("logprobs", b.logprobs);
  r.get("base_url", b.base_url);
  r.get("path", b.path);
  r.get("api_key_env", b.api_key_env);
  r.get("timeout_seconds", b.timeout_seconds);
  if (b.kind == "scripted") {
    std::string script;
    r.get("script", script);
    if (script.empty()) throw UserError(where + ": a scripted backend needs \"script\"");
    b.script = existing(base, script, r.where("script"));
  } else if (b.kind == "http") {
    if (b.base_url.empty()) throw UserError(where + ": an http backend needs \"base_url\"");
    if (!j.contains("logprobs")) b.logprobs = false;
  } else {
    throw UserError(where + ".kind: expected \"scripted\" or \"http\"");
  }
  if (b.timeout_seconds <= 0) throw UserError(where + ".timeout_seconds: must be positive");
  return b;
}

SearchSpec read_search(const json& j, const std::string& where) {
  Reader r(j, where, {"endpoint", "api_key_env", "timeout_seconds"});
  SearchSpec s;
  r.get("endpoint", s.endpoint);
  r.get("api_key_env", s.api_key_env);
  r.get("timeout_seconds", s.timeout_seconds);
  if (s.endpoint.empty()) throw UserError(where + ": \"endpoint\" is required");
  return s;
}

}  // namespace

std::string secret_from_env(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  Reader top(j, "config",
             {"backend", "agents", "retry", "embedding", "prompt_mode", "prompts_dir", "retrieval", "memory", "tools",
              "limits", "plan_temperature", "reflection", "judge", "grpo", "ttl", "training", "output_dir", "seed"});
  RunConfig c;
  c.base_dir = base_dir;
  if (!top.has("backend")) throw UserError("config: \"backend\" is required");
  c.backend = read_backend(top.at("backend"), "config.backend", base_dir);

  if (top.has("agents")) {
    const auto& a = top.at("agents");
    if (!a.is_object()) throw UserError("config.agents: expected an object");
    for (const auto& [name, spec] : a.items()) {
      auto where = "config.agents." + name;
      Reader r(spec, where, {"model", "backend"});
      AgentSpec s;
      r.get("model", s.model);
      if (r.has("backend")) s.backend = read_backend(r.at("backend"), where + ".backend", base_dir);
      c.agents[name] = std::move(s);
    }
  }

  if (top.has("retry")) {
    Reader r(top.at("retry"), "config.retry", {"retries", "backoff_seconds"});
    r.get("retries", c.retry.retries);
    r.get("backoff_seconds", c.retry.backoff_seconds);
    if (c.retry.retries < 0 || c.retry.backoff_seconds < 0) throw UserError("config.retry: values must be non-negative");
  }

  if (top.has("embedding")) {
    Reader r(top.at("embedding"), "config.embedding", {"kind", "dimension", "base_url", "path", "model", "api_key_env"});
    r.get("kind", c.embedding.kind);
    r.get("dimension", c.embedding.dimension);
    r.get("base_url", c.embedding.base_url);
    r.get("path", c.embedding.path);
    r.get("model", c.embedding.model);
    r.get("api_key_env", c.embedding.api_key_env);
    if (c.embedding.kind != "hashing" && c.embedding.kind != "http") {
      throw UserError("config.embedding.kind: expected \"hashing\" or \"http\"");
    }
    if (c.embedding.dimension == 0) throw UserError("config.embedding.dimension: must be positive");
    if (c.embedding.kind == "http" && c.embedding.base_url.empty()) {
      throw UserError("config.embedding: an http embedder needs \"base_url\"");
    }
  }

  if (top.has("prompt_mode")) {
    std::string m;
    top.get("prompt_mode", m);
    c.prompt_mode = agent::prompt_mode_from_string(m);
  }
  if (top.has("prompts_dir")) {
    std::string d;
    top.get("prompts_dir", d);
    c.prompts_dir = existing(base_dir, d, "config.prompts_dir");
  }

  auto& rc = c.memory.manager.retrieval;
  if (top.has("retrieval")) {
    Reader r(top.at("retrieval"), "config.retrieval",
             {"alpha_question", "alpha_caption", "lambda_similarity", "lambda_value", "lambda_frequency", "k_positive",
              "k_negative", "norm_epsilon"});
    r.get("alpha_question", rc.alpha_question);
    r.get("alpha_caption", rc.alpha_caption);
    r.get("lambda_similarity", rc.lambda_similarity);
    r.get("lambda_value", rc.lambda_value);
    r.get("lambda_frequency", rc.lambda_frequency);
    r.get("k_positive", rc.k_positive);
    r.get("k_negative", rc.k_negative);
    r.get("norm_epsilon", rc.norm_epsilon);
  }
  try {
    rc.validate();
  } catch (const Error& e) {
    throw UserError(std::string("config.retrieval: ") + e.what());
  }

  if (top.has("memory")) {
    Reader r(top.at("memory"), "config.memory",
             {"store", "meta_store", "replace_threshold", "replace_within_label", "classify_category", "categories",
              "clear_policy", "update_on_episode"});
    std::string store, meta;
    r.get("store", store);
    r.get("meta_store", meta);
    if (!store.empty()) c.memory.store = store;
    if (!meta.empty()) c.memory.meta_store = meta;
    r.get("replace_threshold", c.memory.manager.replace_threshold);
    r.get("replace_within_label", c.memory.manager.replace_within_label);
    r.get("classify_category", c.memory.manager.classify_category);
    r.get("categories", c.memory.manager.categories);
    r.get("update_on_episode", c.memory.update_on_episode);
    if (r.has("clear_policy")) {
      Reader p(r.at("clear_policy"), "config.memory.clear_policy", {"label", "max_value", "min_usage"});
      const auto& cp = r.at("clear_policy");
      if (cp.contains("label") && cp.at("label").is_null()) {
        c.memory.clear_policy.label.reset();
      } else if (p.has("label")) {
        std::string l;
        p.get("label", l);
        c.memory.clear_policy.label = memory::judgment_from_string(l);
      }
      p.get("max_value", c.memory.clear_policy.max_value);
      p.get("min_usage", c.memory.clear_policy.min_usage, 0);
    }
  }
  c.memory.store = resolve(base_dir, c.memory.store.string());
  c.memory.meta_store = resolve(base_dir, c.memory.meta_store.string());
  if (c.memory.manager.replace_threshold < -1.0 || c.memory.manager.replace_threshold > 1.0) {
    throw UserError("config.memory.replace_threshold: must lie in [-1, 1]");
  }

  if (top.has("tools")) {
    Reader r(top.at("tools"), "config.tools",
             {"text_k", "image_k", "budget", "corpus", "web_search", "image_cache", "image_search"});
    r.get("text_k", c.tools.config.text_k);
    r.get("image_k", c.tools.config.image_k);
    r.get("budget", c.tools.config.budget);
    if (r.has("corpus")) {
      std::string p;
      r.get("corpus", p);
      c.tools.corpus = existing(base_dir, p, "config.tools.corpus");
    }
    if (r.has("image_cache")) {
      std::string p;
      r.get("image_cache", p);
      c.tools.image_cache = existing(base_dir, p, "config.tools.image_cache");
    }
    if (r.has("web_search")) c.tools.web_search = read_search(r.at("web_search"), "config.tools.web_search");
    if (r.has("image_search")) c.tools.image_search = read_search(r.at("image_search"), "config.tools.image_search");
    if (c.tools.config.text_k == 0 || c.tools.config.image_k == 0 || c.tools.config.budget == 0) {
      throw UserError("config.tools: k and budget must be positive");
    }
  }

  if (top.has("limits")) {
    Reader r(top.at("limits"), "config.limits", {"assistant_turns", "user_turns", "max_tokens", "executor_temperature"});
    r.get("assistant_turns", c.executor.limits.assistant_turns);
    r.get("user_turns", c.executor.limits.user_turns);
    r.get("max_tokens", c.executor.max_tokens);
    r.get("executor_temperature", c.executor.temperature);
    if (c.executor.limits.assistant_turns < 1 || c.executor.limits.user_turns < 0 || c.executor.max_tokens < 1) {
      throw UserError("config.limits: turn and token limits must be positive");
    }
  }
  top.get("plan_temperature", c.plan_temperature);
  top.get("reflection", c.reflection);

  if (top.has("judge")) {
    Reader r(top.at("judge"), "config.judge", {"mode", "parallel_reviewers"});
    std::string m;
    r.get("mode", m);
    if (!m.empty()) c.judge_mode = ttl::judge_mode_from_string(m);
    r.get("parallel_reviewers", c.parallel_reviewers);
  }

  if (top.has("grpo")) {
    Reader r(top.at("grpo"), "config.grpo", {"clip", "kl_beta", "advantage_epsilon", "population_std"});
    r.get("clip", c.grpo.clip);
    r.get("kl_beta", c.grpo.kl_beta);
    r.get("advantage_epsilon", c.grpo.advantage_epsilon);
    r.get("population_std", c.grpo.population_std);
  }
  try {
    c.grpo.validate();
  } catch (const Error& e) {
    throw UserError(std::string("config.grpo: ") + e.what());
  }

  std::string out;
  top.get("output_dir", out);
  if (!out.empty()) c.output_dir = out;
  c.output_dir = resolve(base_dir, c.output_dir.string());
  top.get("seed", c.seed, 0);

  auto& t = c.ttl;
  bool ttl_export = true;
  if (top.has("ttl")) {
    Reader r(top.at("ttl"), "config.ttl",
             {"group_size", "epochs", "router_examples", "plan_temperature", "reflection", "parallel_rollouts",
              "selective_clear", "trainer_command", "length_metric", "export"});
    r.get("group_size", t.group_size);
    r.get("epochs", t.epochs);
    r.get("router_examples", t.router_examples);
    r.get("plan_temperature", t.plan_temperature);
    r.get("parallel_rollouts", t.parallel_rollouts);
    r.get("selective_clear", t.selective_clear);
    r.get("export", ttl_export);
    if (r.has("trainer_command")) {
      std::string cmd;
      r.get("trainer_command", cmd);
      t.trainer_command = cmd;
    }
    if (r.has("length_metric")) {
      std::string m;
      r.get("length_metric", m);
      t.length_metric = ttl::length_metric_from_string(m);
    }
    t.reflection = c.reflection;
    r.get("reflection", t.reflection);
  } else {
    t.reflection = c.reflection;
  }
  t.mode = c.judge_mode;
  t.seed = c.seed;
  t.grpo = c.grpo;
  t.executor = c.executor;
  t.clear_policy = c.memory.clear_policy;
  if (ttl_export) t.export_dir = c.output_dir / "exports" / "ttl";
  t.validate();

  auto& s = c.training;
  s.grpo = c.grpo;
  s.executor = c.executor;
  if (top.has("training")) {
    Reader r(top.at("training"), "config.training",
             {"group_size", "batch_size", "learning_rate", "rollout_temperature", "caption_in_stage1",
              "parallel_rollouts"});
    r.get("group_size", s.group_size);
    r.get("batch_size", s.batch_size);
    r.get("learning_rate", s.learning_rate);
    r.get("rollout_temperature", s.rollout_temperature);
    r.get("caption_in_stage1", s.caption_in_stage1);
    r.get("parallel_rollouts", s.parallel_rollouts);
  }
  s.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw UserError("config file not found: " + path.string());
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw UserError(path.string() + ": not valid JSON");
  auto base = fs::absolute(path).parent_path();
  return from_json(j, base);
}

std::vector<agent::Task> load_taskset(const fs::path& path) {
  if (!fs::exists(path)) throw UserError("task file not found: " + path.string());
  std::vector<json> lines;
  try {
    lines = read_jsonl(path);
  } catch (const FormatError& e) {
    throw UserError(e.what());
  }
  auto base = fs::absolute(path).parent_path();
  std::set<std::string> ids;
  std::vector<agent::Task> tasks;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    agent::Task t;
    try {
      t = agent::Task::from_json(lines[i]);
    } catch (const UserError& e) {
      throw UserError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    } catch (const json::exception& e) {
      throw UserError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (!ids.insert(t.id).second) throw UserError(path.string() + ": duplicate task id \"" + t.id + "\"");
    if (t.image && t.image->rfind("http://", 0) != 0 && t.image->rfind("https://", 0) != 0) {
      t.image = resolve(base, *t.image).string();
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace memplan::harness
