#include <benchmark/benchmark.h>

#include <random>

#include "skillatlas/ability_map.hpp"

using namespace skillatlas;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

Data make_data(std::size_t n, std::size_t p) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Data d{Matrix(n, p), std::vector<double>(n)};
  for (auto& v : d.X.data) v = u(rng) < 0.3 ? 1.0 : 0.0;
  for (std::size_t r = 0; r < n; ++r) d.y[r] = 0.4 * d.X.at(r, 0) + 0.2 * d.X.at(r, p / 2) + 0.1 * u(rng);
  return d;
}

}  // namespace

static void BM_TrainTree(benchmark::State& state) {
  const auto d = make_data(static_cast<std::size_t>(state.range(0)), 200);
  ForestParams p;
  p.features = FeatureRule::Third;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(d.X, d.y, p, seed++));
}
BENCHMARK(BM_TrainTree)->Arg(200)->Arg(900);

static void BM_TrainForest(benchmark::State& state) {
  const auto d = make_data(400, 100);
  ForestParams p;
  p.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(d.X, d.y, p, 1, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_TrainForest)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
