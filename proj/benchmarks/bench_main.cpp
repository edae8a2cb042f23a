#include <benchmark/benchmark.h>

#include <random>

#include "memplan/memory/embedding.hpp"
#include "memplan/memory/memory_store.hpp"
#include "memplan/rl/advantage.hpp"
#include "memplan/rl/grpo.hpp"
#include "memplan/tools/corpus_index.hpp"

using namespace memplan;

namespace {

memory::Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  memory::Vector v(dim);
  for (auto& x : v) x = n(rng);
  return memory::normalized(std::move(v));
}

memory::MemoryStore make_store(std::size_t units, std::size_t dim, std::mt19937_64& rng) {
  memory::MemoryStore store;
  for (std::size_t i = 0; i < units; ++i) {
    memory::MemoryUnit u;
    u.question = "q" + std::to_string(i);
    u.question_embedding = random_unit(rng, dim);
    if (i % 2) u.caption_embedding = random_unit(rng, dim);
    u.workflow = "w";
    u.label = i % 3 ? memory::Judgment::Correct : memory::Judgment::Incorrect;
    u.usage = i % 7;
    u.success = u.usage / 2;
    store.insert(u);
  }
  return store;
}

void BM_ScoreAll(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto store = make_store(static_cast<std::size_t>(state.range(0)), 256, rng);
  memory::Query q{random_unit(rng, 256), random_unit(rng, 256)};
  memory::RetrievalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(store.score_all(q, {}, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreAll)->Arg(64)->Arg(1024)->Arg(16384);

void BM_Retrieve(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto store = make_store(static_cast<std::size_t>(state.range(0)), 256, rng);
  memory::Query q{random_unit(rng, 256), std::nullopt};
  memory::RetrievalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(store.retrieve(q, {}, cfg));
}
BENCHMARK(BM_Retrieve)->Arg(1024)->Arg(16384);

void BM_TextSearch(benchmark::State& state) {
  auto embedder = std::make_shared<memory::HashingEmbedder>(256);
  tools::CorpusIndex index(embedder);
  for (int i = 0; i < state.range(0); ++i) {
    tools::Passage p;
    p.id = static_cast<tools::DocId>(i);
    p.title = "Passage " + std::to_string(i);
    p.text = "Record " + std::to_string(i) + " mentions landmark " + std::to_string(i % 97) + " built in year " +
             std::to_string(1800 + i % 200);
    index.add(std::move(p));
  }
  for (auto _ : state) benchmark::DoNotOptimize(index.text_search("landmark 42 built in year 1874", 5));
}
BENCHMARK(BM_TextSearch)->Arg(1000)->Arg(20000);

void BM_GroupAdvantages(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<double> rewards(static_cast<std::size_t>(state.range(0)));
  for (auto& r : rewards) r = static_cast<double>(rng() % 21) / 20.0;
  for (auto _ : state) benchmark::DoNotOptimize(rl::group_advantages(rewards));
}
BENCHMARK(BM_GroupAdvantages)->Arg(8)->Arg(64);

void BM_GrpoObjective(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lp(-3.0, 0.0);
  const std::size_t group = 8, tokens = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<rl::TokenRecord>> groups(group);
  std::vector<double> adv(group);
  for (std::size_t i = 0; i < group; ++i) {
    adv[i] = lp(rng) + 1.5;
    for (std::size_t t = 0; t < tokens; ++t) {
      bool m = t % 3 != 0;
      groups[i].push_back({"t", m ? agent::Source::Planner : agent::Source::Tool, m, lp(rng), lp(rng), lp(rng)});
    }
  }
  rl::GrpoConfig cfg;
  cfg.kl_beta = 0.04;
  for (auto _ : state) benchmark::DoNotOptimize(rl::grpo_objective(adv, groups, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(group * tokens));
}
BENCHMARK(BM_GrpoObjective)->Arg(256)->Arg(4096);

}  // namespace
BENCHMARK_MAIN();
