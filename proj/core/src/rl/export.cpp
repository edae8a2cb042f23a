#include "memplan/rl/export.hpp"

#include <map>
#include <mutex>

#include "memplan/common/error.hpp"
#include "memplan/common/hash.hpp"
#include "memplan/common/jsonl.hpp"
#include "memplan/common/text.hpp"

namespace memplan::rl {

namespace {

std::mutex& destination_mutex(const std::filesystem::path& p) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> registry;
  std::lock_guard lock(registry_mu);
  auto& slot = registry[std::filesystem::absolute(p).lexically_normal().string()];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

nlohmann::json logp_array(const std::vector<TokenRecord>& tokens, std::optional<double> TokenRecord::*field) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tokens) arr.push_back(t.*field ? nlohmann::json(*(t.*field)) : nlohmann::json(nullptr));
  return arr;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return stem.parent_path() / (stem.filename().string() + suffix);
}

}  // namespace

nlohmann::json ExportManifest::to_json() const {
  return {{"schema", kManifestSchema},
          {"file", file.filename().string()},
          {"records", records},
          {"sha256", sha256},
          {"task_id", task_id},
          {"stage", stage}};
}

std::string render_export(const ExportBatch& batch) {
  if (batch.records.empty()) throw PreconditionError("cannot export an empty rollout group");
  if (batch.stats.advantages.size() != batch.records.size()) {
    throw PreconditionError("export needs one advantage per rollout");
  }
  std::vector<nlohmann::json> lines;
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const auto& rec = batch.records[i];
    auto toks = nlohmann::json::array();
    auto srcs = nlohmann::json::array();
    auto mask = nlohmann::json::array();
    for (const auto& t : rec.tokens) {
      toks.push_back(t.token);
      srcs.push_back(agent::to_string(t.source));
      mask.push_back(t.mask ? 1 : 0);
    }
    lines.push_back({{"schema", kExportSchema},
                     {"task_id", batch.task_id},
                     {"stage", batch.stage},
                     {"index", i},
                     {"trainable", agent::to_string(batch.trainable)},
                     {"trainable_model", batch.trainable_model},
                     {"frozen_model", batch.frozen_model},
                     {"tokens", toks},
                     {"sources", srcs},
                     {"mask", mask},
                     {"logp_theta", logp_array(rec.tokens, &TokenRecord::logp_theta)},
                     {"logp_old", logp_array(rec.tokens, &TokenRecord::logp_old)},
                     {"logp_ref", logp_array(rec.tokens, &TokenRecord::logp_ref)},
                     {"reward", rec.reward.to_json()},
                     {"advantage", rec.advantage},
                     {"group", {{"size", batch.records.size()}, {"mean", batch.stats.mean}, {"std", batch.stats.stddev}}},
                     {"failed", rec.failed},
                     {"facts", rec.facts},
                     {"config", batch.config.to_json()},
                     {"metadata", batch.metadata}});
  }
  return dump_jsonl(lines);
}

ExportManifest export_training_signals(const ExportBatch& batch, const std::filesystem::path& stem) {
  auto content = render_export(batch);
  ExportManifest m;
  m.file = with_suffix(stem, ".jsonl");
  m.records = batch.records.size();
  m.sha256 = sha256_hex(content);
  m.task_id = batch.task_id;
  m.stage = batch.stage;
  std::lock_guard lock(destination_mutex(m.file));
  if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());
  write_file_atomic(m.file, content);
  write_file_atomic(with_suffix(stem, ".manifest.json"), m.to_json().dump(2) + "\n");
  return m;
}

VerifyReport verify_export(const std::filesystem::path& manifest_path) {
  VerifyReport rep;
  auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    rep.problems.push_back("manifest is not a JSON object");
    return rep;
  }
  if (manifest.value("schema", std::string()) != kManifestSchema) rep.problems.push_back("unexpected manifest schema");
  auto file = manifest_path.parent_path() / manifest.value("file", std::string());
  std::string content;
  try {
    content = read_file(file);
  } catch (const std::exception& e) {
    rep.problems.push_back(e.what());
    return rep;
  }
  if (sha256_hex(content) != manifest.value("sha256", std::string())) rep.problems.push_back("content hash mismatch");

  std::vector<nlohmann::json> lines;
  try {
    lines = parse_jsonl(content, file.string());
  } catch (const std::exception& e) {
    rep.problems.push_back(e.what());
    return rep;
  }
  rep.records = lines.size();
  if (manifest.value("records", std::size_t{0}) != lines.size()) rep.problems.push_back("record count mismatch");

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    auto where = "record " + std::to_string(i) + ": ";
    try {
      if (l.at("schema").get<std::string>() != kExportSchema) rep.problems.push_back(where + "unexpected schema");
      auto reward = RewardBreakdown::from_json(l.at("reward"));
      if (reward.recompute() != reward.twentieths) rep.problems.push_back(where + "reward does not match components");
      if (l.at("reward").at("total").get<double>() != reward.total()) rep.problems.push_back(where + "reward total");
      const auto& facts = l.at("facts");
      if (facts.contains("final_correct")) {
        bool fc = facts.at("final_correct").get<bool>();
        bool fmt = facts.at("format_ok").get<bool>();
        RewardBreakdown expect;
        if (reward.role == RewardRole::Executor) {
          expect = executor_reward(fc, facts.at("tool_ok").get<bool>(), fmt);
        } else {
          bool ic = facts.at("intermediate_correct").get<bool>();
          expect = planner_reward(fc, ic, facts.at("reflection_triggered").get<bool>(), ic, fmt);
        }
        if (l.at("failed").get<bool>()) expect = reward.role == RewardRole::Executor ? executor_reward(false, false, false)
                                                                                   : planner_reward(false, false, false, false, false);
        if (expect.twentieths != reward.twentieths) rep.problems.push_back(where + "reward does not follow from facts");
      }
      auto trainable = l.at("trainable").get<std::string>();
      const auto& srcs = l.at("sources");
      const auto& mask = l.at("mask");
      if (srcs.size() != mask.size() || srcs.size() != l.at("tokens").size()) {
        rep.problems.push_back(where + "token arrays differ in length");
        continue;
      }
      for (std::size_t t = 0; t < srcs.size(); ++t) {
        if ((srcs[t].get<std::string>() == trainable) != (mask[t].get<int>() == 1)) {
          rep.problems.push_back(where + "mask disagrees with source at token " + std::to_string(t));
          break;
        }
      }
      auto frozen = l.at("frozen_model").get<std::string>();
      if (!frozen.empty() && frozen == l.at("trainable_model").get<std::string>()) {
        rep.problems.push_back(where + "frozen model listed as trainable");
      }
    } catch (const std::exception& e) {
      rep.problems.push_back(where + e.what());
    }
  }
  return rep;
}

}  // namespace memplan::rl
