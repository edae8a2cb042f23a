#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memplan/agent/plan.hpp"
#include "memplan/agent/trajectory.hpp"

namespace memplan::rl {

struct GrpoConfig {
  double clip = 0.2;
  double kl_beta = 0.0;
  std::size_t group_size = 8;
  double advantage_epsilon = 1e-4;
  bool population_std = true;

  void validate() const;
  nlohmann::json to_json() const;
  static GrpoConfig from_json(const nlohmann::json& j);
};

struct TokenRecord {
  std::string token;
  agent::Source source = agent::Source::Executor;
  bool mask = false;  // trainable token
  std::optional<double> logp_theta;
  std::optional<double> logp_old;
  std::optional<double> logp_ref;
};

// Token records for one rollout with masks for `trainable`. When the planner
// is trainable its plan (and an unused reflection decision) are included;
// model tokens start with identical current/old/reference log-probabilities.
std::vector<TokenRecord> rollout_tokens(const agent::Plan* plan, const agent::Trajectory& trajectory,
                                        agent::Source trainable);

struct ObjectiveReport {
  std::vector<std::vector<double>> token_terms;  // zero where masked
  std::vector<double> trajectory_means;
  std::vector<double> trajectory_kl;
  double surrogate = 0.0;  // mean of trajectory means
  double kl = 0.0;         // mean of trajectory KL
  double value = 0.0;      // surrogate - beta * kl
};

// Clipped surrogate averaged over trainable tokens per trajectory, then over
// the group, minus the KL penalty. Throws PreconditionError when a trainable
// token lacks a log-probability or a trajectory has no trainable tokens.
ObjectiveReport grpo_objective(std::span<const double> advantages, const std::vector<std::vector<TokenRecord>>& tokens,
                               const GrpoConfig& config);

}  // namespace memplan::rl
