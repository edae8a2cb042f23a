#include "memplan/judging/judge.hpp"

#include "memplan/common/error.hpp"

namespace memplan::judging {

CorrectnessVerdict judge_correctness(gateway::Gateway& gateway, const agent::PromptLibrary& prompts,
                                     const std::string& question, const std::string& predicted,
                                     const std::string& gold) {
  if (predicted == gold) {
    CorrectnessVerdict v;
    v.correct = true;
    v.exact_match = true;
    v.method = "exact";
    v.rationale = "exact match";
    return v;
  }
  gateway::ChatRequest req;
  req.agent = kJudgeAgent;
  req.messages.push_back(
      {gateway::Role::User,
       prompts.render("judge", {{"question", question}, {"gold", gold}, {"predicted", predicted}}),
       std::nullopt});
  return parse_verdict(gateway.complete(std::move(req)).text);
}

CorrectnessVerdict Judge::evaluate(const agent::Task& task, const agent::Trajectory& trajectory,
                                   const std::string& answer) {
  if (answer == agent::kUnableToDetermine) {
    CorrectnessVerdict v;
    v.method = "none";
    v.rationale = "no answer was produced";
    return v;
  }
  return judge(task, trajectory, answer);
}

GoldJudge::GoldJudge(gateway::Gateway& gateway, const agent::PromptLibrary& prompts)
    : gateway_(gateway), prompts_(prompts) {}

CorrectnessVerdict GoldJudge::judge(const agent::Task& task, const agent::Trajectory&, const std::string& answer) {
  if (!task.gold) throw PreconditionError("task " + task.id + " has no gold answer for supervised judging");
  return judge_correctness(gateway_, prompts_, task.question, answer, *task.gold);
}

PeerReviewJudge::PeerReviewJudge(gateway::Gateway& gateway, const agent::PromptLibrary& prompts, bool parallel)
    : review_(gateway, prompts, parallel) {}

CorrectnessVerdict PeerReviewJudge::judge(const agent::Task& task, const agent::Trajectory& trajectory,
                                          const std::string& answer) {
  return review_.unsupervised_verdict(task.question, trajectory, answer).verdict;
}

}  // namespace memplan::judging
