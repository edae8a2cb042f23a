#include "memplan/rl/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "memplan/common/error.hpp"
#include "memplan/common/text.hpp"

namespace memplan::rl {

void GrpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw UserError("grpo clip must lie in (0, 1)");
  if (kl_beta < 0.0) throw UserError("grpo KL coefficient must be non-negative");
  if (group_size < 1) throw UserError("group size must be >= 1");
  if (!(advantage_epsilon > 0.0)) throw UserError("advantage epsilon must be positive");
}

nlohmann::json GrpoConfig::to_json() const {
  return {{"clip", clip},
          {"kl_beta", kl_beta},
          {"group_size", group_size},
          {"advantage_epsilon", advantage_epsilon},
          {"population_std", population_std}};
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j) {
  GrpoConfig c;
  c.clip = j.at("clip").get<double>();
  c.kl_beta = j.at("kl_beta").get<double>();
  c.group_size = j.at("group_size").get<std::size_t>();
  c.advantage_epsilon = j.at("advantage_epsilon").get<double>();
  c.population_std = j.at("population_std").get<bool>();
  return c;
}

namespace {

void append_segment(std::vector<TokenRecord>& out, agent::Source source, const std::string& text,
                    const std::vector<gateway::TokenLogprob>& tokens, bool has_logprobs, agent::Source trainable) {
  const bool mask = source == trainable;
  if (has_logprobs && !tokens.empty()) {
    for (const auto& t : tokens) out.push_back({t.token, source, mask, t.logprob, t.logprob, t.logprob});
    return;
  }
  for (auto& piece : text::proxy_tokens(text)) out.push_back({std::move(piece), source, mask, {}, {}, {}});
}

}  // namespace

std::vector<TokenRecord> rollout_tokens(const agent::Plan* plan, const agent::Trajectory& trajectory,
                                        agent::Source trainable) {
  std::vector<TokenRecord> out;
  const bool planner_view = trainable == agent::Source::Planner && plan;
  if (planner_view) {
    append_segment(out, agent::Source::Planner, plan->output.text, plan->output.tokens, !plan->output.tokens.empty(),
                   trainable);
  }
  for (const auto& seg : trajectory.segments) {
    append_segment(out, seg.source, seg.text, seg.tokens, seg.has_logprobs, trainable);
  }
  if (planner_view && plan->reflection && !plan->reflection_triggered) {
    append_segment(out, agent::Source::Planner, plan->reflection->text, plan->reflection->tokens,
                   !plan->reflection->tokens.empty(), trainable);
  }
  return out;
}

ObjectiveReport grpo_objective(std::span<const double> advantages, const std::vector<std::vector<TokenRecord>>& tokens,
                               const GrpoConfig& config) {
  config.validate();
  if (advantages.size() != tokens.size()) throw PreconditionError("one advantage per trajectory required");
  if (tokens.empty()) throw PreconditionError("objective over an empty group");
  ObjectiveReport rep;
  const double lo = 1.0 - config.clip;
  const double hi = 1.0 + config.clip;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double adv = advantages[i];
    std::vector<double> terms(tokens[i].size(), 0.0);
    double sum = 0.0, kl_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < tokens[i].size(); ++t) {
      const auto& tok = tokens[i][t];
      if (!tok.mask) continue;
      if (!tok.logp_theta || !tok.logp_old || !tok.logp_ref) {
        throw PreconditionError("trainable token " + std::to_string(t) + " of trajectory " + std::to_string(i) +
                                " lacks a log-probability");
      }
      const double ratio = std::exp(*tok.logp_theta - *tok.logp_old);
      const double term = std::min(ratio * adv, std::clamp(ratio, lo, hi) * adv);
      const double d = *tok.logp_ref - *tok.logp_theta;
      terms[t] = term;
      sum += term;
      kl_sum += std::exp(d) - d - 1.0;
      ++n;
    }
    if (n == 0) throw PreconditionError("trajectory " + std::to_string(i) + " has no trainable tokens");
    rep.token_terms.push_back(std::move(terms));
    rep.trajectory_means.push_back(sum / static_cast<double>(n));
    rep.trajectory_kl.push_back(kl_sum / static_cast<double>(n));
  }
  const auto g = static_cast<double>(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    rep.surrogate += rep.trajectory_means[i];
    rep.kl += rep.trajectory_kl[i];
  }
  rep.surrogate /= g;
  rep.kl /= g;
  rep.value = rep.surrogate - config.kl_beta * rep.kl;
  return rep;
}

}  // namespace memplan::rl
