#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include "memplan/gateway/chat.hpp"
#include "memplan/tools/corpus_index.hpp"
#include "memplan/tools/image_search.hpp"
#include "memplan/tools/web_search.hpp"

namespace memplan::tools {

struct ToolConfig {
  std::size_t text_k = 3;
  std::size_t image_k = 3;
  std::size_t budget = kDefaultToolBudget;
};

// The Executor's environment. Immutable once configured; execute() is safe
// to call concurrently.
class ToolBox {
 public:
  explicit ToolBox(ToolConfig config = {});

  void set_corpus(std::shared_ptr<const CorpusIndex> corpus) { corpus_ = std::move(corpus); }
  void set_web_search(std::shared_ptr<TextSearchTransport> web) { web_ = std::move(web); }
  void set_image_cache(std::shared_ptr<const ImageCache> cache) { image_cache_ = std::move(cache); }
  void set_image_transport(std::shared_ptr<ImageSearchTransport> live) { image_live_ = std::move(live); }

  // Image arguments "input" and "<image>" refer to the task's own image.
  Observation execute(const ToolCall& call, const std::optional<gateway::ImageRef>& task_image) const;
  RenderedObservation render(const Observation& obs) const { return render_observation(obs, config_.budget); }

  const ToolConfig& config() const { return config_; }

 private:
  ToolConfig config_;
  std::shared_ptr<const CorpusIndex> corpus_;
  std::shared_ptr<TextSearchTransport> web_;
  std::shared_ptr<const ImageCache> image_cache_;
  std::shared_ptr<ImageSearchTransport> image_live_;
};

}  // namespace memplan::tools
