#include <benchmark/benchmark.h>

#include <random>

#include "persona_eval/matching.hpp"

using namespace persona_eval;

namespace {

SimilarityMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n * n);
  for (auto& x : v) x = d(rng);
  return SimilarityMatrix(n, n, std::move(v));
}

void BM_MatchPersonas(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(match_personas(m, 0.5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatchPersonas)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_BruteForceMatch(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_match(m, 0.5));
}
BENCHMARK(BM_BruteForceMatch)->DenseRange(2, 7);

void BM_SegmentSentences(benchmark::State& state) {
  const std::string text =
      "I have two dogs. Dr. Smith is my vet! We walk every morning, e.g. at 6.30 a.m. Do you like dogs? "
      "Я люблю зиму, лыжи и т.д. Мы живём в Москве.";
  for (auto _ : state) benchmark::DoNotOptimize(segment_sentences(text));
}
BENCHMARK(BM_SegmentSentences);

}  // namespace
