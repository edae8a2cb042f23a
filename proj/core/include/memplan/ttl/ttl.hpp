#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/agent/episode.hpp"
#include "memplan/memory/meta_plan.hpp"
#include "memplan/rl/export.hpp"

namespace memplan::ttl {

enum class JudgeMode { Supervised, Unsupervised };
enum class LengthMetric { Steps, Tokens };

std::string_view to_string(JudgeMode m);
JudgeMode judge_mode_from_string(std::string_view s);
LengthMetric length_metric_from_string(std::string_view s);

struct TtlConfig {
  std::size_t group_size = 4;
  int epochs = 1;
  JudgeMode mode = JudgeMode::Supervised;
  std::filesystem::path export_dir;  // empty: no files written
  std::size_t router_examples = 2;
  double plan_temperature = 0.7;
  std::uint64_t seed = 0;
  bool reflection = true;
  bool parallel_rollouts = false;
  bool selective_clear = false;
  memory::ClearPolicy clear_policy;
  std::optional<std::string> trainer_command;
  LengthMetric length_metric = LengthMetric::Steps;
  rl::GrpoConfig grpo;
  agent::ExecutorSettings executor;

  void validate() const;
};

struct TtlContext {
  gateway::Gateway& gateway;
  const agent::PromptLibrary& prompts;
  const tools::ToolBox& tools;
  agent::MemoryManager& manager;
  memory::MetaPlanStore& meta;
  judging::Judge& judge;
  gateway::Captioner* captioner = nullptr;
};

struct Rollout {
  agent::Plan plan;
  agent::Trajectory trajectory;
  bool aborted = false;
  std::optional<std::string> error;

  bool usable() const { return !aborted && trajectory.final_answer.has_value(); }
  std::size_t length(LengthMetric metric) const;
};

struct RolloutGroup {
  std::string question;
  std::optional<std::string> caption;
  memory::BucketKey bucket;
  memory::MemoryContext context;
  std::vector<Rollout> rollouts;

  std::size_t usable() const;
};

// One retrieval, then G plans sampled at the plan temperature, each executed
// with the planner deciding on its own whether to reflect. The task must
// not carry a gold answer.
RolloutGroup rollout_group(const agent::Task& task, TtlContext& ctx, const TtlConfig& cfg);

struct RouteDecision {
  std::size_t index = 0;
  bool fallback = false;  // unparsable or out-of-range router reply
  bool rerouted = false;  // router picked an aborted rollout
  std::string raw;
};

inline constexpr const char* kRouterAgent = "router";
inline constexpr const char* kNoExamples = "(no examples)";

// Picks a candidate from the plans alone, with Meta Plan pairs as examples.
RouteDecision route_final(const std::string& question, const RolloutGroup& group, const memory::MetaPlanStore& meta,
                          TtlContext& ctx, std::size_t examples);

std::optional<std::size_t> parse_router_choice(std::string_view reply);

struct ParadigmExtraction {
  std::optional<std::size_t> success;
  std::optional<std::size_t> failure;
  std::optional<memory::MetaPlanPair> pair;
};

// Shortest successful rollout (ties to the lower index) and one failed rollout
// drawn with `rng`. Aborted rollouts are never selected.
ParadigmExtraction extract_paradigms(const RolloutGroup& group, const std::vector<bool>& correct,
                                     std::mt19937_64& rng, LengthMetric metric,
                                     const memory::Vector& question_embedding);

// Plan text as stored in Meta Plan pairs (steps plus any revision).
std::string plan_text(const agent::Plan& plan);

struct ConsolidationReport {
  std::vector<memory::ConsolidationOutcome> outcomes;
  bool meta_pair_added = false;
};

ConsolidationReport consolidate_ttl(const ParadigmExtraction& extraction, const agent::Task& task,
                                    const RolloutGroup& group, TtlContext& ctx, bool chosen_correct);

struct StepEvent {
  std::uint64_t seq = 0;
  std::string kind;  // "answer", "verdict"
  std::string detail;
};

struct RolloutSummary {
  std::vector<std::string> plan;
  std::optional<std::vector<std::string>> revision;
  bool reflection_triggered = false;
  std::optional<std::string> intermediate_answer;
  std::optional<std::string> final_answer;
  bool aborted = false;
  std::optional<std::string> error;
  std::size_t length = 0;
  bool correct = false;
  bool intermediate_correct = false;
  rl::RewardBreakdown reward;
  double advantage = 0.0;
};

struct TtlStepReport {
  std::string task_id;
  int epoch = 0;
  std::size_t index = 0;
  std::string answer;
  RouteDecision route;
  std::vector<RolloutSummary> rollouts;
  rl::GroupStats stats;
  ParadigmExtraction extraction;
  ConsolidationReport consolidation;
  std::optional<rl::ExportManifest> manifest;
  std::optional<std::string> trainer_model;
  std::size_t cleared = 0;
  bool correct = false;
  std::vector<StepEvent> events;

  nlohmann::json to_json() const;
};

// rollout_group -> route_final (answer fixed here) -> verdicts -> rewards ->
// advantages -> extract_paradigms -> consolidate_ttl -> export.
TtlStepReport ttl_step(const agent::Task& task, TtlContext& ctx, const TtlConfig& cfg, int epoch, std::size_t index);

struct EpochSummary {
  int epoch = 0;  // 1-based
  std::size_t tasks = 0;
  std::size_t correct = 0;
  bool supervised = true;
  std::size_t memory_size = 0;
  std::size_t meta_pairs = 0;
  std::size_t inserted = 0;
  std::size_t replaced = 0;
  std::size_t router_fallbacks = 0;
  std::size_t cleared = 0;

  double rate() const { return tasks ? static_cast<double>(correct) / static_cast<double>(tasks) : 0.0; }
  double fallback_rate() const {
    return tasks ? static_cast<double>(router_fallbacks) / static_cast<double>(tasks) : 0.0;
  }
  // "accuracy" with gold judging, "acceptance_rate" with peer review.
  std::string rate_name() const { return supervised ? "accuracy" : "acceptance_rate"; }
  std::vector<std::string> metric_lines() const;
  std::string line() const;
  nlohmann::json to_json() const;
};

struct RunOptions {
  int start_epoch = 0;  // epochs already completed
  std::optional<std::size_t> stop_after_steps;
  std::function<void(const EpochSummary&)> on_epoch_end;
  std::function<void(const TtlStepReport&)> on_step;
};

struct RunReport {
  std::vector<TtlStepReport> steps;
  std::vector<EpochSummary> epochs;
  bool interrupted = false;

  nlohmann::json to_json() const;
};

RunReport run_ttl(const std::vector<agent::Task>& tasks, TtlContext& ctx, const TtlConfig& cfg,
                  const RunOptions& options = {});

}  // namespace memplan::ttl
