#include "memplan/memory/memory_unit.hpp"

#include "memplan/common/error.hpp"

namespace memplan::memory {

std::string_view to_string(Judgment j) { return j == Judgment::Correct ? "correct" : "incorrect"; }

Judgment judgment_from_string(std::string_view s) {
  if (s == "correct") return Judgment::Correct;
  if (s == "incorrect") return Judgment::Incorrect;
  throw FormatError("unknown judgment label: " + std::string(s));
}

BucketKey BucketKey::parse(std::string_view s) {
  auto slash = s.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == s.size()) {
    throw FormatError("bucket key must look like modality/category: " + std::string(s));
  }
  return {std::string(s.substr(0, slash)), std::string(s.substr(slash + 1))};
}

nlohmann::json MemoryUnit::to_json() const {
  nlohmann::json j{{"id", id},
                   {"bucket", bucket.str()},
                   {"question", question},
                   {"question_embedding", question_embedding},
                   {"workflow", workflow},
                   {"label", std::string(to_string(label))},
                   {"usage", usage},
                   {"success", success},
                   {"created", created}};
  if (caption) j["caption"] = *caption;
  if (caption_embedding) j["caption_embedding"] = *caption_embedding;
  return j;
}

MemoryUnit MemoryUnit::from_json(const nlohmann::json& j) {
  try {
    MemoryUnit u;
    u.id = j.at("id").get<UnitId>();
    u.bucket = BucketKey::parse(j.at("bucket").get<std::string>());
    u.question = j.at("question").get<std::string>();
    u.question_embedding = j.at("question_embedding").get<Vector>();
    u.workflow = j.at("workflow").get<std::string>();
    u.label = judgment_from_string(j.at("label").get<std::string>());
    u.usage = j.at("usage").get<std::uint64_t>();
    u.success = j.at("success").get<std::uint64_t>();
    u.created = j.value("created", std::uint64_t{0});
    if (j.contains("caption")) u.caption = j.at("caption").get<std::string>();
    if (j.contains("caption_embedding")) u.caption_embedding = j.at("caption_embedding").get<Vector>();
    return u;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad memory unit record: ") + e.what());
  }
}

}  // namespace memplan::memory
