#include <benchmark/benchmark.h>

#include "persona_eval/metrics.hpp"

using namespace persona_eval;

namespace {

std::vector<Dialogue> make_corpus(std::size_t n, std::vector<ExtractionRecord>& records) {
  std::vector<Dialogue> out;
  for (std::size_t i = 0; i < n; ++i) {
    Dialogue d;
    d.id = "d" + std::to_string(i);
    d.language = "en";
    d.turns = {{Participant::bot_0, "I walk my dogs every morning before work."},
               {Participant::bot_1, "I work nights as a nurse in a big hospital."}};
    d.target_personas[0] = {"I have two dogs.", "I work in an office.", "I like mornings."};
    d.target_personas[1] = {"I am a nurse.", "I work night shifts."};
    records.push_back({d.id, Participant::bot_0, {"I own two dogs.", "I walk every morning.", "I like tea."}});
    records.push_back({d.id, Participant::bot_1, {"I am a nurse.", "I work at night."}});
    out.push_back(std::move(d));
  }
  return out;
}

void BM_StubEmbed(benchmark::State& state) {
  StubEmbedder e;
  const std::vector<std::string> texts(64, "I have been playing the guitar since I was twelve years old.");
  for (auto _ : state) benchmark::DoNotOptimize(e.embed_texts(texts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_StubEmbed);

void BM_EvaluateCorpus(benchmark::State& state) {
  std::vector<ExtractionRecord> records;
  const auto dialogues = make_corpus(static_cast<std::size_t>(state.range(0)), records);
  StubEmbedder e;
  StubClassifier c;
  EvalConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_corpus(dialogues, records, e, c, cfg, static_cast<std::size_t>(state.range(1))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_EvaluateCorpus)->Args({100, 1})->Args({100, 4})->Args({1000, 4});

void BM_RougeL(benchmark::State& state) {
  const std::string a = "I have two dogs and a cat. I work as a nurse at night. I like hiking on weekends.";
  const std::string b = "I own two dogs. I am a night nurse. On weekends I go hiking in the mountains.";
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
}
BENCHMARK(BM_RougeL);

}  // namespace
