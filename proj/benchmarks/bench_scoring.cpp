#include <benchmark/benchmark.h>

#include <random>

#include "skillatlas/embed.hpp"
#include "skillatlas/skill_score.hpp"
#include "skillatlas/text_prep.hpp"
#include "skillatlas/util.hpp"

using namespace skillatlas;

static void BM_Cosine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = test_provider("left", n, 1);
  const auto b = test_provider("right", n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cosine(a, b));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Cosine)->Arg(128)->Arg(768);

static void BM_TestProvider(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(test_provider("sentence " + std::to_string(i++), 768, 3));
}
BENCHMARK(BM_TestProvider);

static void BM_ScoreSyllabus(benchmark::State& state) {
  const auto n_skills = static_cast<std::size_t>(state.range(0));
  SkillTaxonomy tax;
  for (std::size_t s = 0; s < n_skills; ++s) tax.entries.push_back({"D" + std::to_string(s), "skill " + std::to_string(s)});
  TestEmbeddingProvider provider(128, 1);
  SkillScorer scorer(tax, provider);
  std::vector<Sentence> sents;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::string t = "learning sentence " + std::to_string(i);
    sents.push_back({"syl", i, t, normalize_text(t)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score("syl", sents));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n_skills * sents.size()));
}
BENCHMARK(BM_ScoreSyllabus)->Arg(50)->Arg(500);

static void BM_FilterLearning(benchmark::State& state) {
  const PhraseList logistics = {"office hours", "late work", "grading policy", "attendance"};
  const PhraseList learning = {"analyze", "evaluate", "design", "interpret data"};
  std::mt19937_64 rng(1);
  const std::vector<std::string> words = {"students", "will", "analyze", "office", "hours", "the", "data", "design"};
  std::vector<Sentence> sents;
  for (std::size_t i = 0; i < 1000; ++i) {
    std::string t;
    for (int w = 0; w < 10; ++w) t += words[rng() % words.size()] + " ";
    sents.push_back({"s", i, t, normalize_text(t)});
  }
  LearningFilter filter(logistics, learning);
  for (auto _ : state) benchmark::DoNotOptimize(filter.apply(sents));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_FilterLearning);
