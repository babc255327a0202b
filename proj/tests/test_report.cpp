#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/report.hpp"
#include "test_support.hpp"

using namespace persona_eval;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

CorpusEvaluation small_eval(const EvalConfig& cfg) {
  StubEmbedder e;
  StubClassifier c;
  const auto dialogues = load_dialogues(testing_support::fixture("corpus/dialogues.jsonl"));
  const auto records = load_extractions(testing_support::fixture("corpus/extractions.jsonl"));
  return evaluate_corpus(dialogues, records, e, c, cfg, 2);
}

}  // namespace

TEST(EnumNames, RoundTrip) {
  for (auto a : {Aggregation::micro, Aggregation::macro, Aggregation::both}) {
    EXPECT_EQ(parse_aggregation(to_string(a)), a);
  }
  for (auto p : {EmptyDenominatorPolicy::error, EmptyDenominatorPolicy::skip_sample}) {
    EXPECT_EQ(parse_policy(to_string(p)), p);
  }
  for (auto r : {Rollup::any_sentence, Rollup::all_sentences}) EXPECT_EQ(parse_rollup(to_string(r)), r);
  EXPECT_FALSE(parse_aggregation("median").has_value());
}

TEST(ComparisonTable, SortedByF1) {
  std::vector<RunSummary> runs = {
      {"Enc2Enc", 0.811, 0.588, 0.682, {}},
      {"Starling-7B-ru-en", 0.902, 0.749, f1(0.902, 0.749), {{"rougeL", 0.5}}},
      {"FRED-T5", 0.879, 0.753, 0.811, {{"custom", 1.0}}},
  };
  const auto table = render_comparison_table(runs);
  const auto rows = lines(table);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[0].find("F1↓"), std::string::npos);
  EXPECT_LT(rows[0].find("rougeL"), rows[0].find("custom"));
  EXPECT_EQ(rows[1].rfind("Starling-7B-ru-en", 0), 0u);
  EXPECT_NE(rows[1].find("0.902  0.749  0.818"), std::string::npos);
  EXPECT_EQ(rows[2].rfind("FRED-T5", 0), 0u);
  EXPECT_EQ(rows[3].rfind("Enc2Enc", 0), 0u);
  EXPECT_NE(rows[3].find(" -"), std::string::npos);
}

TEST(ManualVsAutomatic, TwoRows) {
  MetricReport manual, automatic;
  manual.precision = 0.75;
  manual.recall = 0.5;
  manual.f1 = 0.6;
  automatic.precision = 1.0;
  automatic.recall = 0.25;
  automatic.f1 = 0.4;
  const auto rows = lines(render_manual_vs_automatic(manual, automatic));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[1].find("0.750  0.500  0.600"), std::string::npos);
  EXPECT_NE(rows[2].find("1.000  0.250  0.400"), std::string::npos);
}

TEST(EvaluationReport, DeterministicAndParseable) {
  EvalConfig cfg;
  cfg.empty_denominator_policy = EmptyDenominatorPolicy::skip_sample;
  const auto a = render_evaluation_report(small_eval(cfg), cfg, "run");
  const auto b = render_evaluation_report(small_eval(cfg), cfg, "run");
  EXPECT_EQ(a, b);
  const auto doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc.at("name"), "run");
  EXPECT_TRUE(doc.contains("micro"));
  EXPECT_TRUE(doc.contains("macro"));

  const auto micro = parse_run_summary(a, "micro");
  const auto macro = parse_run_summary(a, "macro");
  EXPECT_EQ(micro.name, "run");
  EXPECT_NEAR(micro.f1, f1(micro.precision, micro.recall), 1e-9);
  EXPECT_NE(micro.precision, macro.precision);
  EXPECT_TRUE(micro.auxiliary.contains("rougeL"));
  EXPECT_TRUE(micro.auxiliary.contains("bleu"));
}

TEST(EvaluationReport, Summary) {
  EvalConfig cfg;
  cfg.empty_denominator_policy = EmptyDenominatorPolicy::skip_sample;
  const auto s = render_evaluation_summary(small_eval(cfg));
  EXPECT_NE(s.find("micro"), std::string::npos);
  EXPECT_NE(s.find("macro"), std::string::npos);
}

TEST(RunSummary, TopLevelAndErrors) {
  const auto r = parse_run_summary(R"({"precision":0.9,"recall":0.6})", "micro", "file.json");
  EXPECT_EQ(r.name, "file.json");
  EXPECT_NEAR(r.f1, 0.72, 1e-12);
  EXPECT_THROW(parse_run_summary("not json"), ParseError);
  EXPECT_THROW(parse_run_summary(R"({"micro":{"precision":1}})"), ParseError);
  EXPECT_THROW(parse_run_summary("[1,2]"), ParseError);
}
