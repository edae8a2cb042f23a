#include "memplan/tools/toolbox.hpp"

#include "memplan/common/error.hpp"

namespace memplan::tools {

ToolBox::ToolBox(ToolConfig config) : config_(config) {
  if (config_.text_k == 0 || config_.image_k == 0) throw UserError("tool top-k must be >= 1");
  if (config_.budget == 0) throw UserError("tool response budget must be >= 1");
}

Observation ToolBox::execute(const ToolCall& call, const std::optional<gateway::ImageRef>& task_image) const {
  Observation obs;
  obs.tool = call.name;
  if (call.name == ToolName::TextSearch) {
    try {
      if (web_) {
        obs.results = web_->search(call.argument, config_.text_k);
      } else if (corpus_ && !corpus_->empty()) {
        obs = corpus_->text_search(call.argument, config_.text_k);
      } else {
        obs.error = "text search is not configured";
      }
    } catch (const std::exception& e) {
      obs.results.clear();
      obs.error = std::string("text search failed: ") + e.what();
    }
    return obs;
  }

  std::optional<gateway::ImageRef> image;
  try {
    if (call.argument == "input" || call.argument == "<image>" ||
        (task_image && call.argument == task_image->source)) {
      image = task_image;
    } else if (call.argument.rfind("http://", 0) == 0 || call.argument.rfind("https://", 0) == 0) {
      image = gateway::ImageRef::from_url(call.argument);
    } else {
      image = gateway::ImageRef::from_file(call.argument);
    }
  } catch (const std::exception& e) {
    obs.error = e.what();
    return obs;
  }
  if (!image) {
    obs.error = "this task has no input image";
    return obs;
  }
  static const ImageCache kEmpty;
  return image_search(*image, image_cache_ ? *image_cache_ : kEmpty, config_.image_k, image_live_.get());
}

}  // namespace memplan::tools
