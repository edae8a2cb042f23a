#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/agent/executor.hpp"
#include "memplan/agent/manager.hpp"
#include "memplan/agent/prompts.hpp"
#include "memplan/agent/task.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/memory/memory_store.hpp"
#include "memplan/rl/grpo.hpp"
#include "memplan/tools/toolbox.hpp"
#include "memplan/training/training.hpp"
#include "memplan/ttl/ttl.hpp"

namespace memplan::harness {

struct BackendSpec {
  std::string kind = "scripted";  // "scripted" or "http"
  std::filesystem::path script;   // scripted
  bool strict = true;             // scripted: unmatched requests fail
  bool logprobs = true;
  std::string base_url;  // http
  std::string path = "/v1/chat/completions";
  std::string api_key_env;
  double timeout_seconds = 120.0;
};

struct AgentSpec {
  std::string model;
  std::optional<BackendSpec> backend;
};

struct EmbeddingSpec {
  std::string kind = "hashing";  // "hashing" or "http"
  std::size_t dimension = 256;
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string model;
  std::string api_key_env;
};

struct SearchSpec {
  std::string endpoint;
  std::string api_key_env;
  double timeout_seconds = 30.0;
};

struct ToolsSpec {
  tools::ToolConfig config;
  std::optional<std::filesystem::path> corpus;
  std::optional<SearchSpec> web_search;
  std::optional<std::filesystem::path> image_cache;
  std::optional<SearchSpec> image_search;
};

struct MemorySpec {
  std::filesystem::path store = "memory.jsonl";
  std::filesystem::path meta_store = "meta_plans.jsonl";
  agent::ManagerSettings manager;
  memory::ClearPolicy clear_policy;
  // Whether eval/episode runs write their outcomes back to the store.
  bool update_on_episode = false;
};

struct RunConfig {
  std::filesystem::path base_dir;  // directory of the config file
  BackendSpec backend;
  std::map<std::string, AgentSpec> agents;
  gateway::RetryPolicy retry;
  EmbeddingSpec embedding;
  agent::PromptMode prompt_mode = agent::PromptMode::Guideline;
  std::optional<std::filesystem::path> prompts_dir;
  MemorySpec memory;
  ToolsSpec tools;
  agent::ExecutorSettings executor;
  double plan_temperature = 0.0;
  bool reflection = true;
  ttl::JudgeMode judge_mode = ttl::JudgeMode::Supervised;
  bool parallel_reviewers = false;
  rl::GrpoConfig grpo;
  ttl::TtlConfig ttl;
  training::StageConfig training;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  // Strict: unknown keys, wrong types and unresolvable paths raise UserError
  // before anything is touched. Relative paths resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

// Reads a task file (one JSON task per line). Ids must be unique; relative
// image paths resolve against the task file's directory.
std::vector<agent::Task> load_taskset(const std::filesystem::path& path);

// Reads the environment variable `name`; empty name or unset variable gives
// an empty string.
std::string secret_from_env(const std::string& name);

}  // namespace memplan::harness
