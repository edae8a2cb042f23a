#include "memplan/agent/manager.hpp"

#include <algorithm>

#include "memplan/common/text.hpp"

namespace memplan::agent {

MemoryManager::MemoryManager(gateway::Gateway& gateway, const PromptLibrary& prompts,
                             std::shared_ptr<const memory::Embedder> embedder, memory::MemoryStore& store,
                             ManagerSettings settings)
    : gateway_(gateway), prompts_(prompts), embedder_(std::move(embedder)), store_(store), settings_(std::move(settings)) {
  settings_.retrieval.validate();
}

memory::BucketKey MemoryManager::bucket_for(const Task& task) {
  memory::BucketKey key;
  key.modality = task.modality();
  if (task.category && !task.category->empty()) {
    key.category = text::to_lower(text::trim(*task.category));
    return key;
  }
  if (!settings_.classify_category || settings_.categories.empty()) return key;

  {
    std::lock_guard lock(mu_);
    auto it = category_cache_.find(task.question);
    if (it != category_cache_.end()) {
      key.category = it->second;
      return key;
    }
  }
  std::string labels;
  for (const auto& c : settings_.categories) labels += (labels.empty() ? "" : ", ") + c;
  gateway::ChatRequest req;
  req.agent = kClassifierAgent;
  req.messages.push_back(
      {gateway::Role::User, prompts_.render("classify", {{"labels", labels}, {"question", task.question}}), std::nullopt});
  auto reply = text::to_lower(text::trim(gateway_.complete(std::move(req)).text));
  while (!reply.empty() && (reply.back() == '.' || reply.back() == '"')) reply.pop_back();
  if (!reply.empty() && reply.front() == '"') reply.erase(0, 1);
  std::string category = "general";
  for (const auto& c : settings_.categories) {
    if (text::to_lower(c) == reply) category = text::to_lower(c);
  }
  std::lock_guard lock(mu_);
  category_cache_.emplace(task.question, category);
  key.category = category;
  return key;
}

memory::Query MemoryManager::query_for(const Task& task, const std::optional<std::string>& caption) const {
  if (caption) return memory::Query::encode(*embedder_, task.question, std::string_view(*caption));
  return memory::Query::encode(*embedder_, task.question);
}

memory::MemoryContext MemoryManager::retrieve(const Task& task, const std::optional<std::string>& caption,
                                              const memory::BucketKey& bucket) {
  return store_.retrieve(query_for(task, caption), bucket, settings_.retrieval);
}

std::string mechanical_workflow(const Trajectory& trajectory) {
  std::string out;
  int n = 0;
  for (const auto& s : trajectory.steps) {
    if (s.kind != StepKind::ToolCall && s.kind != StepKind::Answer && s.kind != StepKind::PlanInjection) continue;
    out += (out.empty() ? "" : "\n") + std::to_string(++n) + ". " + std::string(to_string(s.kind)) + ": " + s.text;
  }
  return out.empty() ? std::string("answer directly") : out;
}

std::string MemoryManager::compress(const Task& task, const std::optional<std::string>& caption, const Plan* plan,
                                    const Trajectory& trajectory, memory::Judgment label) {
  auto prompt = prompts_.render(
      "compress",
      {{"outcome", label == memory::Judgment::Correct ? "led to a correct answer" : "led to a wrong answer"},
       {"question", task.question},
       {"caption_section", caption ? "Image description: " + *caption + "\n" : std::string()},
       {"plan", plan ? plan->render() + (plan->revision ? "\nRevision:\n" + plan->render_revision() : "")
                     : std::string("(none)")},
       {"trajectory", trajectory.transcript()},
       {"answer", trajectory.final_answer.value_or(kUnableToDetermine)}});
  gateway::ChatRequest req;
  req.agent = kCompressAgent;
  req.messages.push_back({gateway::Role::User, std::move(prompt), std::nullopt});
  auto reply = gateway_.complete(std::move(req)).text;
  std::string body;
  std::string workflow = text::extract_tag(reply, "workflow", body) ? std::string(text::trim(body))
                                                                     : std::string(text::trim(reply));
  return workflow.empty() ? mechanical_workflow(trajectory) : workflow;
}

memory::ConsolidationOutcome MemoryManager::consolidate(const Task& task, const std::optional<std::string>& caption,
                                                        const memory::BucketKey& bucket, std::string workflow,
                                                        memory::Judgment label) {
  memory::NewMemory m;
  m.question = task.question;
  m.question_embedding = embedder_->encode(task.question);
  if (caption) {
    m.caption = *caption;
    m.caption_embedding = embedder_->encode(*caption);
  }
  m.workflow = std::move(workflow);
  m.label = label;
  return store_.consolidate(std::move(m), bucket, settings_.replace_threshold, settings_.replace_within_label);
}

}  // namespace memplan::agent
