#include <benchmark/benchmark.h>

#include <random>

#include "skillatlas/normalize.hpp"
#include "skillatlas/structure.hpp"

using namespace skillatlas;

namespace {

FosSkillMatrix random_matrix(std::size_t fos, std::size_t skills) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  FosSkillMatrix m;
  for (std::size_t f = 0; f < fos; ++f) m.fos_list.push_back("f" + std::to_string(f));
  for (std::size_t s = 0; s < skills; ++s) m.skill_list.push_back("s" + std::to_string(s));
  m.values.resize(fos * skills);
  for (auto& v : m.values) v = u(rng);
  return m;
}

}  // namespace

static void BM_Rca(benchmark::State& state) {
  const auto m = random_matrix(62, 2070);
  for (auto _ : state) benchmark::DoNotOptimize(rca(m));
}
BENCHMARK(BM_Rca);

static void BM_SpearmanSimilarity(benchmark::State& state) {
  const auto m = random_matrix(62, 2070);
  for (auto _ : state) benchmark::DoNotOptimize(spearman_similarity(m, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_SpearmanSimilarity)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Louvain(benchmark::State& state) {
  const auto sim = spearman_similarity(random_matrix(static_cast<std::size_t>(state.range(0)), 300));
  for (auto _ : state) benchmark::DoNotOptimize(louvain(sim));
}
BENCHMARK(BM_Louvain)->Arg(62)->Arg(200);

static void BM_HierarchicalCluster(benchmark::State& state) {
  const auto sim = spearman_similarity(random_matrix(static_cast<std::size_t>(state.range(0)), 300));
  for (auto _ : state) benchmark::DoNotOptimize(hierarchical_cluster(sim));
}
BENCHMARK(BM_HierarchicalCluster)->Arg(62)->Arg(200);

static void BM_SufficiencyCurve(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> group(60, std::vector<double>(2070));
  for (auto& v : group)
    for (auto& x : v) x = nd(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(sufficiency_curve(group, 10, DistanceMetric::Manhattan, 7, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_SufficiencyCurve)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
