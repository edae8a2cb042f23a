#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "memplan/agent/episode.hpp"
#include "memplan/agent/manager.hpp"
#include "memplan/gateway/gateway.hpp"
#include "memplan/gateway/scripted_backend.hpp"
#include "memplan/judging/judge.hpp"
#include "memplan/memory/embedding.hpp"
#include "memplan/memory/meta_plan.hpp"
#include "memplan/tools/corpus_index.hpp"
#include "memplan/tools/toolbox.hpp"
#include "memplan/ttl/ttl.hpp"

namespace memplan::testkit {

// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& content);

// Forwards to another backend and keeps every request it saw.
class RecordingBackend : public gateway::ChatBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<gateway::ChatBackend> inner) : inner_(std::move(inner)) {}

  gateway::ChatResponse send(const gateway::ChatRequest& request) override;
  bool supports_logprobs() const override { return inner_->supports_logprobs(); }
  std::string name() const override { return "recording:" + inner_->name(); }

  std::vector<gateway::ChatRequest> requests() const;
  // Concatenated message contents of every request made by `agent`.
  std::vector<std::string> prompts_for(const std::string& agent) const;
  std::size_t count(const std::string& agent) const;
  void clear();

 private:
  std::shared_ptr<gateway::ChatBackend> inner_;
  mutable std::mutex mu_;
  std::vector<gateway::ChatRequest> requests_;
};

std::string joined(const gateway::ChatRequest& request);

// Model reply builders.
std::string answer_reply(const std::string& answer, const std::string& thought = "I can answer now.");
std::string search_reply(const std::string& query, const std::string& thought = "I should search.");
std::string image_search_reply(const std::string& thought = "Look up the image.");
std::string plan_reply(const std::vector<std::string>& steps, const std::string& thought = "Plan the search.");
std::string replan_reply(const std::vector<std::string>& steps);
std::string keep_reply();
std::string workflow_reply(const std::string& workflow);
std::string review_reply(double score, const std::vector<std::array<std::string, 3>>& findings = {});
std::string chair_reply(bool accept, const std::string& rationale = "weighed the findings");

// Substrings that identify each prompt template in a request.
inline constexpr const char* kPlannerMarker = "Break the question into";
inline constexpr const char* kReplanMarker = "Decide whether the plan needs a revision";
inline constexpr const char* kInjectionMarker = "The planner reviewed your work";

memory::Vector random_unit(std::mt19937_64& rng, std::size_t dim);

// Gateway over a scripted backend, prompts, a small corpus, stores and both
// judges. Rules are matched in the order they are added.
class World {
 public:
  explicit World(bool strict = true);

  gateway::ScriptedBackend& script() { return *script_; }
  RecordingBackend& recorder() { return *recorder_; }
  gateway::Gateway& gateway() { return *gateway_; }
  const agent::PromptLibrary& prompts() const { return prompts_; }
  const tools::ToolBox& tools() const { return *tools_; }
  memory::MemoryStore& store() { return store_; }
  memory::MetaPlanStore& meta() { return meta_; }
  agent::MemoryManager& manager() { return *manager_; }
  judging::Judge& gold_judge() { return *gold_; }
  judging::Judge& peer_judge() { return *peer_; }
  std::shared_ptr<const memory::Embedder> embedder() const { return embedder_; }

  void on(const std::string& agent, std::vector<std::string> contains, std::vector<std::string> replies);
  void on_last(const std::string& agent, std::vector<std::string> last_contains, std::vector<std::string> replies);
  void rule(gateway::ScriptRule rule) { script_->add(std::move(rule)); }

  agent::EpisodeDeps deps(bool with_memory = true, bool supervised = true);
  ttl::TtlContext ttl_context(bool supervised = true);

 private:
  std::shared_ptr<gateway::ScriptedBackend> script_;
  std::shared_ptr<RecordingBackend> recorder_;
  std::unique_ptr<gateway::Gateway> gateway_;
  agent::PromptLibrary prompts_;
  std::shared_ptr<const memory::Embedder> embedder_;
  std::unique_ptr<tools::ToolBox> tools_;
  memory::MemoryStore store_;
  memory::MetaPlanStore meta_;
  std::unique_ptr<agent::MemoryManager> manager_;
  std::unique_ptr<judging::GoldJudge> gold_;
  std::unique_ptr<judging::PeerReviewJudge> peer_;
};

// Passages loaded into every World corpus.
std::vector<tools::Passage> sample_passages();

}  // namespace memplan::testkit
