#include "support.hpp"

#include <atomic>
#include <fstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

namespace memplan::testkit {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("memplan-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << content;
}

gateway::ChatResponse RecordingBackend::send(const gateway::ChatRequest& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  return inner_->send(request);
}

std::vector<gateway::ChatRequest> RecordingBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<std::string> RecordingBackend::prompts_for(const std::string& agent) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& r : requests_) {
    if (r.agent == agent) out.push_back(joined(r));
  }
  return out;
}

std::size_t RecordingBackend::count(const std::string& agent) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& r : requests_) n += r.agent == agent ? 1 : 0;
  return n;
}

void RecordingBackend::clear() {
  std::lock_guard lock(mu_);
  requests_.clear();
}

std::string joined(const gateway::ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) out += m.content + "\n";
  return out;
}

std::string answer_reply(const std::string& answer, const std::string& thought) {
  return "<think>" + thought + "</think>\n<answer>" + answer + "</answer>";
}

std::string search_reply(const std::string& query, const std::string& thought) {
  nlohmann::json call{{"name", "text_search"}, {"arguments", {{"query", query}}}};
  return "<think>" + thought + "</think>\n<tool_call>" + call.dump() + "</tool_call>";
}

std::string image_search_reply(const std::string& thought) {
  return "<think>" + thought +
         "</think>\n<tool_call>{\"name\": \"image_search\", \"arguments\": {\"image\": \"input\"}}</tool_call>";
}

std::string plan_reply(const std::vector<std::string>& steps, const std::string& thought) {
  std::string body;
  for (std::size_t i = 0; i < steps.size(); ++i) body += std::to_string(i + 1) + ". " + steps[i] + "\n";
  return "<think>" + thought + "</think>\n<plan>\n" + body + "</plan>";
}

std::string replan_reply(const std::vector<std::string>& steps) {
  return plan_reply(steps, "The answer is not supported; revise.");
}

std::string keep_reply() { return "<think>The answer is supported.</think><keep/>"; }

std::string workflow_reply(const std::string& workflow) { return "<workflow>" + workflow + "</workflow>"; }

std::string review_reply(double score, const std::vector<std::array<std::string, 3>>& findings) {
  auto f = nlohmann::json::array();
  for (const auto& x : findings) f.push_back({{"severity", x[0]}, {"evidence", x[1]}, {"note", x[2]}});
  return nlohmann::json{{"score", score}, {"findings", f}}.dump();
}

std::string chair_reply(bool accept, const std::string& rationale) {
  return nlohmann::json{{"decision", accept ? "accept" : "reject"}, {"rationale", rationale}, {"cited", nlohmann::json::array()}}
      .dump();
}

memory::Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  memory::Vector v(dim);
  for (auto& x : v) x = n(rng);
  return memory::normalized(std::move(v));
}

std::vector<tools::Passage> sample_passages() {
  return {
      {1, "Harbor Lighthouse", "The Harbor Lighthouse was completed in 1874 and stands 31 meters tall.", "https://example.org/lighthouse"},
      {2, "Glass Museum", "The Glass Museum opened in 1921; its founder was Ada Marsh.", "https://example.org/museum"},
      {3, "River Bridge", "The River Bridge spans 410 meters and was designed by Tomas Reyes.", "https://example.org/bridge"},
      {4, "Clock Tower", "The Clock Tower bell weighs 2.5 tonnes and was cast in 1902.", "https://example.org/clock"},
      {5, "Botanical Garden", "The Botanical Garden holds 12000 plant species in 40 hectares.", "https://example.org/garden"},
  };
}

World::World(bool strict) {
  script_ = std::make_shared<gateway::ScriptedBackend>(strict);
  recorder_ = std::make_shared<RecordingBackend>(script_);
  gateway_ = std::make_unique<gateway::Gateway>(recorder_, gateway::RetryPolicy{3, 0.5});
  gateway_->set_sleeper([](std::chrono::duration<double>) {});
  gateway_->set_model(agent::kPlannerAgent, "planner-model");
  gateway_->set_model(agent::kExecutorAgent, "executor-model");
  embedder_ = std::make_shared<memory::HashingEmbedder>(128);
  auto corpus = std::make_shared<tools::CorpusIndex>(embedder_);
  for (auto& p : sample_passages()) corpus->add(p);
  tools_ = std::make_unique<tools::ToolBox>();
  tools_->set_corpus(corpus);
  auto cache = std::make_shared<tools::ImageCache>();
  tools_->set_image_cache(cache);
  manager_ = std::make_unique<agent::MemoryManager>(*gateway_, prompts_, embedder_, store_);
  gold_ = std::make_unique<judging::GoldJudge>(*gateway_, prompts_);
  peer_ = std::make_unique<judging::PeerReviewJudge>(*gateway_, prompts_);
}

void World::on(const std::string& agent, std::vector<std::string> contains, std::vector<std::string> replies) {
  script_->add(agent, std::move(contains), std::move(replies));
}

void World::on_last(const std::string& agent, std::vector<std::string> last_contains,
                    std::vector<std::string> replies) {
  gateway::ScriptRule r;
  r.agent = agent;
  r.last_contains = std::move(last_contains);
  for (auto& t : replies) r.replies.push_back(gateway::ScriptedReply::text(std::move(t)));
  script_->add(std::move(r));
}

agent::EpisodeDeps World::deps(bool with_memory, bool supervised) {
  return agent::EpisodeDeps{*gateway_, prompts_, *tools_, supervised ? static_cast<judging::Judge&>(*gold_) : *peer_,
                            with_memory ? manager_.get() : nullptr, nullptr};
}

ttl::TtlContext World::ttl_context(bool supervised) {
  return ttl::TtlContext{*gateway_, prompts_, *tools_, *manager_, meta_,
                         supervised ? static_cast<judging::Judge&>(*gold_) : *peer_, nullptr};
}

}  // namespace memplan::testkit
