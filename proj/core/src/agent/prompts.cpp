#include "memplan/agent/prompts.hpp"

#include "memplan/common/error.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/common/text.hpp"

namespace memplan::agent {

namespace {

const std::map<std::string, std::string>& builtin() {
  static const std::map<std::string, std::string> kDefaults{
#include "default_prompts.inc"
  };
  return kDefaults;
}

}  // namespace

std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::NoExtra: return "no_extra";
    case PromptMode::LongContextMemory: return "long_context_memory";
    case PromptMode::Guideline: return "guideline";
  }
  return "guideline";
}

PromptMode prompt_mode_from_string(std::string_view s) {
  if (s == "no_extra") return PromptMode::NoExtra;
  if (s == "long_context_memory") return PromptMode::LongContextMemory;
  if (s == "guideline") return PromptMode::Guideline;
  throw UserError("unknown prompt mode \"" + std::string(s) + "\" (no_extra, long_context_memory, guideline)");
}

PromptLibrary::PromptLibrary() : templates_(builtin()) {}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw UserError("prompt directory not found: " + dir.string());
  PromptLibrary lib;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    auto name = entry.path().stem().string();
    if (!lib.templates_.count(name)) throw UserError("unknown prompt template file: " + entry.path().string());
    lib.templates_[name] = read_file(entry.path());
  }
  return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw PreconditionError("no prompt template named " + name);
  return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::vector<std::pair<std::string, std::string>>& slots) const {
  return text::fill(get(name), slots);
}

void PromptLibrary::set(const std::string& name, std::string text) { templates_[name] = std::move(text); }

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : templates_) out.push_back(k);
  return out;
}

}  // namespace memplan::agent
