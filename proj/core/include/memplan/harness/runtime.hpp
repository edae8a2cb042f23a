#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "memplan/agent/episode.hpp"
#include "memplan/gateway/captioner.hpp"
#include "memplan/harness/config.hpp"
#include "memplan/judging/judge.hpp"
#include "memplan/memory/meta_plan.hpp"

namespace memplan::harness {

// Advisory exclusive lock on `<path>.lock`, held for the object's lifetime.
// Throws UserError when another process holds it.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& store);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// Everything a command needs, built from one RunConfig. Stores are loaded
// at construction and written back only through save().
class Runtime {
 public:
  explicit Runtime(RunConfig config);

  const RunConfig& config() const { return config_; }
  gateway::Gateway& gateway() { return *gateway_; }
  const agent::PromptLibrary& prompts() const { return prompts_; }
  const tools::ToolBox& tools() const { return *tools_; }
  memory::MemoryStore& store() { return store_; }
  memory::MetaPlanStore& meta() { return meta_; }
  agent::MemoryManager& manager() { return *manager_; }
  gateway::Captioner& captioner() { return *captioner_; }
  std::shared_ptr<const memory::Embedder> embedder() const { return embedder_; }

  // Judge for `mode`: gold-answer judging or peer review.
  judging::Judge& judge(ttl::JudgeMode mode);

  agent::EpisodeDeps episode_deps(ttl::JudgeMode mode, bool with_memory);
  agent::EpisodeOptions episode_options() const;

  void save_store() const;
  void save_meta() const;

 private:
  RunConfig config_;
  std::unique_ptr<gateway::Gateway> gateway_;
  agent::PromptLibrary prompts_;
  std::shared_ptr<const memory::Embedder> embedder_;
  std::unique_ptr<tools::ToolBox> tools_;
  memory::MemoryStore store_;
  memory::MetaPlanStore meta_;
  std::unique_ptr<agent::MemoryManager> manager_;
  std::unique_ptr<gateway::Captioner> captioner_;
  std::unique_ptr<judging::GoldJudge> gold_judge_;
  std::unique_ptr<judging::PeerReviewJudge> peer_judge_;
};

}  // namespace memplan::harness
