#pragma once

#include <memory>
#include <string>

#include "memplan/agent/prompts.hpp"
#include "memplan/agent/task.hpp"
#include "memplan/agent/trajectory.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/judging/peer_review.hpp"
#include "memplan/judging/verdict.hpp"

namespace memplan::judging {

inline constexpr const char* kJudgeAgent = "judge";

// Byte-equal answers are correct without a call; otherwise one judge call.
CorrectnessVerdict judge_correctness(gateway::Gateway& gateway, const agent::PromptLibrary& prompts,
                                     const std::string& question, const std::string& predicted,
                                     const std::string& gold);

// Common contract of supervised and unsupervised judging.
class Judge {
 public:
  virtual ~Judge() = default;

  // The "unable to determine" sentinel is incorrect without any call;
  // everything else goes to judge().
  CorrectnessVerdict evaluate(const agent::Task& task, const agent::Trajectory& trajectory, const std::string& answer);

  virtual CorrectnessVerdict judge(const agent::Task& task, const agent::Trajectory& trajectory,
                                   const std::string& answer) = 0;
  virtual std::string name() const = 0;
};

class GoldJudge : public Judge {
 public:
  GoldJudge(gateway::Gateway& gateway, const agent::PromptLibrary& prompts);
  // Throws PreconditionError when the task has no gold answer.
  CorrectnessVerdict judge(const agent::Task& task, const agent::Trajectory& trajectory,
                           const std::string& answer) override;
  std::string name() const override { return "supervised"; }

 private:
  gateway::Gateway& gateway_;
  const agent::PromptLibrary& prompts_;
};

// Ignores gold answers entirely.
class PeerReviewJudge : public Judge {
 public:
  PeerReviewJudge(gateway::Gateway& gateway, const agent::PromptLibrary& prompts, bool parallel = false);
  CorrectnessVerdict judge(const agent::Task& task, const agent::Trajectory& trajectory,
                           const std::string& answer) override;
  std::string name() const override { return "unsupervised"; }

 private:
  PeerReview review_;
};

}  // namespace memplan::judging
