#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "memplan/memory/embedding.hpp"

namespace memplan::memory {

using UnitId = std::uint64_t;

enum class Judgment { Correct, Incorrect };

std::string_view to_string(Judgment j);
Judgment judgment_from_string(std::string_view s);

// Units are partitioned by (modality, question category); retrieval never
// crosses buckets.
struct BucketKey {
  std::string modality = "text";
  std::string category = "general";

  std::string str() const { return modality + "/" + category; }
  static BucketKey parse(std::string_view s);

  auto operator<=>(const BucketKey&) const = default;
};

struct MemoryUnit {
  UnitId id = 0;
  BucketKey bucket;
  std::string question;
  Vector question_embedding;
  std::optional<std::string> caption;
  std::optional<Vector> caption_embedding;
  std::string workflow;
  Judgment label = Judgment::Correct;
  std::uint64_t usage = 0;
  std::uint64_t success = 0;
  std::uint64_t created = 0;  // logical clock tick at insertion

  double value() const { return static_cast<double>(success) / static_cast<double>(usage + 1); }
  double frequency() const { return 1.0 / static_cast<double>(usage + 1); }

  nlohmann::json to_json() const;
  static MemoryUnit from_json(const nlohmann::json& j);
};

}  // namespace memplan::memory
