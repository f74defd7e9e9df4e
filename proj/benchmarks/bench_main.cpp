#include <random>

#include <benchmark/benchmark.h>

#include "bundler/cluster.hpp"
#include "bundler/distance.hpp"
#include "bundler/topics.hpp"
#include "support/oracles.hpp"

using namespace bundler;

namespace {

ProximityMatrix random_matrix(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProximityMatrix m(std::vector<std::string>(n), ProximityKind::kCombined, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, u(rng));
  }
  return m;
}

void BM_NnChain(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(agglomerate(m, Linkage::kAverage));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NnChain)->RangeMultiplier(2)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_Naive(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(naive_agglomerate(m, Linkage::kAverage));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Naive)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNCubed);

void BM_Intertextual(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  auto draw = [&] {
    FrequencyProfile p;
    for (int id = 0; id < static_cast<int>(len); ++id) {
      if (rng() % 3 == 0) continue;
      const std::int64_t f = 1 + static_cast<std::int64_t>(rng() % 9);
      p.freqs.emplace_back(id, f);
      p.total += f;
    }
    return p;
  };
  const FrequencyProfile a = draw();
  const FrequencyProfile b = draw();
  for (auto _ : state) benchmark::DoNotOptimize(intertextual_distance(a, b));
}
BENCHMARK(BM_Intertextual)->Range(64, 16384);

void BM_LdaSweeps(benchmark::State& state) {
  auto synth = testing::two_topic_corpus(200, 100, 3);
  const Vocabulary vocab = build_vocabulary(synth.corpus, 1);
  LdaConfig cfg;
  cfg.num_topics = static_cast<int>(state.range(0));
  cfg.iterations = 20;
  cfg.burn_in = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_lda(synth.corpus, vocab, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.iterations * 200 * 100);
}
BENCHMARK(BM_LdaSweeps)->Arg(2)->Arg(26)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
