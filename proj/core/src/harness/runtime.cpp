#include "memplan/harness/runtime.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/gateway/http_backend.hpp"
#include "memplan/gateway/scripted_backend.hpp"
#include "memplan/tools/corpus_index.hpp"
#include "memplan/tools/image_search.hpp"
#include "memplan/tools/web_search.hpp"

namespace memplan::harness {

namespace {

std::shared_ptr<gateway::ChatBackend> make_backend(const BackendSpec& spec) {
  if (spec.kind == "scripted") {
    auto b = gateway::ScriptedBackend::from_jsonl(spec.script, spec.strict);
    b->set_synthesize_logprobs(spec.logprobs);
    return b;
  }
  gateway::HttpBackendConfig hc;
  hc.base_url = spec.base_url;
  hc.path = spec.path;
  hc.api_key = secret_from_env(spec.api_key_env);
  hc.logprobs = spec.logprobs;
  hc.timeout_seconds = spec.timeout_seconds;
  return std::make_shared<gateway::HttpChatBackend>(hc);
}

}  // namespace

StoreLock::StoreLock(const std::filesystem::path& store) : path_(store.string() + ".lock") {
  if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("cannot open lock file " + path_.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw UserError("store " + store.string() + " is in use by another process (lock " + path_.string() + ")");
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Runtime::Runtime(RunConfig config) : config_(std::move(config)) {
  gateway_ = std::make_unique<gateway::Gateway>(make_backend(config_.backend), config_.retry);
  for (const auto& [agent, spec] : config_.agents) {
    if (spec.backend) {
      gateway_->bind(agent, make_backend(*spec.backend), spec.model);
    } else if (!spec.model.empty()) {
      gateway_->set_model(agent, spec.model);
    }
  }
  if (config_.prompts_dir) prompts_ = agent::PromptLibrary::from_directory(*config_.prompts_dir);

  if (config_.embedding.kind == "http") {
    memory::HttpEmbedderConfig ec;
    ec.base_url = config_.embedding.base_url;
    ec.path = config_.embedding.path;
    ec.model = config_.embedding.model;
    ec.dimension = config_.embedding.dimension;
    ec.api_key = secret_from_env(config_.embedding.api_key_env);
    embedder_ = std::make_shared<memory::HttpEmbedder>(ec);
  } else {
    embedder_ = std::make_shared<memory::HashingEmbedder>(config_.embedding.dimension);
  }

  tools_ = std::make_unique<tools::ToolBox>(config_.tools.config);
  if (config_.tools.corpus) {
    tools_->set_corpus(
        std::make_shared<const tools::CorpusIndex>(tools::CorpusIndex::from_jsonl(*config_.tools.corpus, embedder_)));
  }
  if (config_.tools.web_search) {
    const auto& w = *config_.tools.web_search;
    tools_->set_web_search(
        std::make_shared<tools::HttpWebSearch>(w.endpoint, secret_from_env(w.api_key_env), w.timeout_seconds));
  }
  if (config_.tools.image_cache) {
    tools_->set_image_cache(
        std::make_shared<const tools::ImageCache>(tools::ImageCache::from_jsonl(*config_.tools.image_cache)));
  }
  if (config_.tools.image_search) {
    const auto& s = *config_.tools.image_search;
    tools_->set_image_transport(
        std::make_shared<tools::HttpImageSearch>(s.endpoint, secret_from_env(s.api_key_env), s.timeout_seconds));
  }

  store_ = memory::MemoryStore::load_or_empty(config_.memory.store);
  meta_ = memory::MetaPlanStore::load_or_empty(config_.memory.meta_store);
  manager_ = std::make_unique<agent::MemoryManager>(*gateway_, prompts_, embedder_, store_, config_.memory.manager);
  captioner_ = std::make_unique<gateway::Captioner>(*gateway_, prompts_.get("caption"));
}

judging::Judge& Runtime::judge(ttl::JudgeMode mode) {
  if (mode == ttl::JudgeMode::Supervised) {
    if (!gold_judge_) gold_judge_ = std::make_unique<judging::GoldJudge>(*gateway_, prompts_);
    return *gold_judge_;
  }
  if (!peer_judge_) peer_judge_ = std::make_unique<judging::PeerReviewJudge>(*gateway_, prompts_, config_.parallel_reviewers);
  return *peer_judge_;
}

agent::EpisodeDeps Runtime::episode_deps(ttl::JudgeMode mode, bool with_memory) {
  return agent::EpisodeDeps{*gateway_, prompts_, *tools_, judge(mode), with_memory ? manager_.get() : nullptr,
                            captioner_.get()};
}

agent::EpisodeOptions Runtime::episode_options() const {
  agent::EpisodeOptions o;
  o.mode = config_.prompt_mode;
  o.executor = config_.executor;
  o.plan_temperature = config_.plan_temperature;
  o.reflection = config_.reflection;
  o.consolidate = config_.memory.update_on_episode;
  return o;
}

void Runtime::save_store() const { store_.save(config_.memory.store); }

void Runtime::save_meta() const { meta_.save(config_.memory.meta_store); }

}  // namespace memplan::harness
