#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace memplan::agent {

struct Task {
  std::string id;
  std::string question;
  std::optional<std::string> image;  // local path or http(s) URL
  std::optional<std::string> gold;
  std::optional<std::string> category;

  std::string modality() const { return image ? "image" : "text"; }

  // Copy with the gold answer removed; everything that produces the emitted
  // answer only ever sees this view.
  Task without_gold() const;

  // Throws UserError when the question or id is empty.
  void validate() const;

  nlohmann::json to_json() const;
  static Task from_json(const nlohmann::json& j);
};

}  // namespace memplan::agent
