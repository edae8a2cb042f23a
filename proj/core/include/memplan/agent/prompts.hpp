#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace memplan::agent {

enum class PromptMode { NoExtra, LongContextMemory, Guideline };

std::string_view to_string(PromptMode m);
PromptMode prompt_mode_from_string(std::string_view s);

// Named prompt templates with `{{slot}}` fill-ins. Built-in defaults can be
// overridden file by file from a directory of `<name>.txt` files.
class PromptLibrary {
 public:
  PromptLibrary();

  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name, const std::vector<std::pair<std::string, std::string>>& slots) const;
  void set(const std::string& name, std::string text);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace memplan::agent
