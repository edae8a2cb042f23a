#include "memplan/agent/task.hpp"

#include "memplan/common/error.hpp"
#include "memplan/common/text.hpp"

namespace memplan::agent {

Task Task::without_gold() const {
  Task t = *this;
  t.gold.reset();
  return t;
}

void Task::validate() const {
  if (id.empty()) throw UserError("task id must not be empty");
  if (text::trim(question).empty()) throw UserError("task " + id + ": question must not be empty");
}

nlohmann::json Task::to_json() const {
  nlohmann::json j{{"id", id}, {"question", question}};
  if (image) j["image"] = *image;
  if (gold) j["gold"] = *gold;
  if (category) j["category"] = *category;
  return j;
}

Task Task::from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"id", "question", "image", "gold", "answer", "category"};
  if (!j.is_object()) throw UserError("task record must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw UserError("unknown task field \"" + key + "\"");
  }
  Task t;
  try {
    t.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    t.question = j.at("question").get<std::string>();
    if (j.contains("image") && !j["image"].is_null()) t.image = j["image"].get<std::string>();
    if (j.contains("gold") && !j["gold"].is_null()) t.gold = j["gold"].get<std::string>();
    if (j.contains("answer") && !j["answer"].is_null()) {
      if (t.gold) throw UserError("task " + t.id + " has both gold and answer");
      t.gold = j["answer"].get<std::string>();
    }
    if (j.contains("category") && !j["category"].is_null()) t.category = j["category"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UserError(std::string("malformed task record: ") + e.what());
  }
  t.validate();
  return t;
}

}  // namespace memplan::agent
