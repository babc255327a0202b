#include <gtest/gtest.h>

#include <cmath>

#include "persona_eval/errors.hpp"
#include "persona_eval/matching.hpp"

using namespace persona_eval;

namespace {

SimilarityMatrix matrix(std::vector<std::vector<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows[0].size();
  std::vector<double> values;
  for (const auto& row : rows) values.insert(values.end(), row.begin(), row.end());
  return SimilarityMatrix(r, c, std::move(values));
}

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Pairs index_pairs(const MatchOutcome& o) {
  Pairs out;
  for (const auto& p : o.pairs) out.emplace_back(p.extracted, p.target);
  return out;
}

}  // namespace

TEST(Segment, SplitsOnTerminalPunctuation) {
  EXPECT_EQ(segment_sentences("I like dogs. I have two cats."),
            (std::vector<std::string>{"I like dogs.", "I have two cats."}));
  EXPECT_EQ(segment_sentences("Really?! Yes… fine"), (std::vector<std::string>{"Really?!", "Yes…", "fine"}));
}

TEST(Segment, EmptyAndWhitespace) {
  EXPECT_TRUE(segment_sentences("").empty());
  EXPECT_TRUE(segment_sentences("   \n ").empty());
}

TEST(Segment, SingleRussianSentenceStaysWhole) {
  EXPECT_EQ(segment_sentences("Мне нравится программировать компьютеры"),
            (std::vector<std::string>{"Мне нравится программировать компьютеры"}));
}

TEST(Segment, AbbreviationsDoNotSplit) {
  EXPECT_EQ(segment_sentences("I met Dr. Smith today. He was nice."),
            (std::vector<std::string>{"I met Dr. Smith today.", "He was nice."}));
  EXPECT_EQ(segment_sentences("Я люблю книги, фильмы и т.д. Ещё музыку."),
            (std::vector<std::string>{"Я люблю книги, фильмы и т.д. Ещё музыку."}));
  EXPECT_EQ(segment_sentences("Pets, e.g. dogs."), (std::vector<std::string>{"Pets, e.g. dogs."}));
}

TEST(Segment, NoSplitInsideTokens) {
  EXPECT_EQ(segment_sentences("Version 2.5 is out."), (std::vector<std::string>{"Version 2.5 is out."}));
}

TEST(Cosine, HandCases) {
  const EmbeddingVector v{{0.3, -0.2, 0.9}};
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-9);
  EXPECT_NEAR(cosine_similarity({{1, 0}}, {{0, 1}}), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity({{1, 1}}, {{1, 0}}), 1.0 / std::sqrt(2.0), 1e-4);
  EXPECT_NEAR(cosine_similarity({{1, 1}}, {{-1, -1}}), -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(cosine_similarity({{1, 2}}, {{3, 4}}), cosine_similarity({{3, 4}}, {{1, 2}}));
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine_similarity({{1, 0}}, {{1, 0, 0}}), DimensionMismatch);
  EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 0}}), ZeroVector);
}

TEST(SimilarityMatrixType, RejectsOutOfRangeValues) {
  EXPECT_THROW(SimilarityMatrix(1, 1, {1.5}), InvalidArgument);
  EXPECT_THROW(SimilarityMatrix(1, 1, {std::nan("")}), InvalidArgument);
  EXPECT_THROW(SimilarityMatrix(2, 2, {0.1}), InvalidArgument);
  EXPECT_DOUBLE_EQ(SimilarityMatrix(1, 1, {1.0 + 1e-12}).at(0, 0), 1.0);
}

TEST(SimilarityMatrixType, Transpose) {
  const auto m = matrix({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}});
  const auto t = m.transposed();
  ASSERT_EQ(t.rows(), 3u);
  ASSERT_EQ(t.cols(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m.at(r, c), t.at(c, r));
  }
}

TEST(BuildMatrix, IdenticalSentences) {
  StubEmbedder e;
  const std::vector<std::string> s = {"I like dogs."};
  const auto m = build_similarity_matrix(s, s, e);
  ASSERT_EQ(m.rows(), 1u);
  ASSERT_EQ(m.cols(), 1u);
  EXPECT_NEAR(m.at(0, 0), 1.0, 1e-12);
}

TEST(BuildMatrix, EmptySide) {
  StubEmbedder e;
  const std::vector<std::string> none, some = {"a b c", "d e f"};
  const auto m = build_similarity_matrix(none, some, e);
  EXPECT_EQ(m.rows(), 0u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_TRUE(match_personas(m, 0.5).pairs.empty());
  EXPECT_EQ(match_personas(m, 0.5).unmatched_target, (std::vector<std::size_t>{0, 1}));
}

TEST(BuildMatrix, AgreesWithPairwiseCosines) {
  StubEmbedder e;
  const std::vector<std::string> left = {"I have two cats.", "I am a nurse."};
  const std::vector<std::string> right = {"I own two cats.", "I work as a nurse."};
  const auto m = build_similarity_matrix(left, right, e);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_DOUBLE_EQ(m.at(r, c), cosine_similarity(e.embed(left[r]), e.embed(right[c])));
    }
  }
}

TEST(Match, IdentityDiagonal) {
  const auto m = matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto o = match_personas(m, 0.5);
  EXPECT_EQ(index_pairs(o), (Pairs{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_TRUE(o.unmatched_extracted.empty());
  EXPECT_TRUE(o.unmatched_target.empty());
}

TEST(Match, AllBelowThreshold) {
  const auto m = matrix({{0.1, 0.2}, {0.3, 0.4}});
  const auto o = match_personas(m, 0.5);
  EXPECT_TRUE(o.pairs.empty());
  EXPECT_EQ(o.unmatched_extracted, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(o.unmatched_target, (std::vector<std::size_t>{0, 1}));
}

TEST(Match, ThreeByThreeExample) {
  // Enumerating every injective assignment by hand: {(0,0),(1,1)} = 1.8 beats
  // {(0,1),(1,0)} = 1.65; row and column 2 never clear 0.5.
  const auto m = matrix({{.9, .8, .1}, {.85, .9, .1}, {.1, .1, .2}});
  const auto o = match_personas(m, 0.5);
  EXPECT_EQ(index_pairs(o), (Pairs{{0, 0}, {1, 1}}));
  EXPECT_NEAR(o.total_similarity(), 1.8, 1e-12);
  EXPECT_EQ(o.unmatched_extracted, (std::vector<std::size_t>{2}));
  EXPECT_EQ(o.unmatched_target, (std::vector<std::size_t>{2}));
  EXPECT_EQ(brute_force_match(m, 0.5), o);
}

TEST(Match, CardinalityBeatsTotalSimilarity) {
  // Greedy would take (0,0)=0.99 and strand row 1; the maximum matching uses both rows.
  const auto m = matrix({{0.99, 0.81}, {0.82, 0.1}});
  const auto o = match_personas(m, 0.8);
  EXPECT_EQ(index_pairs(o), (Pairs{{0, 1}, {1, 0}}));
}

TEST(Match, LexicographicTieBreak) {
  const auto m = matrix({{0.9, 0.9}, {0.9, 0.9}});
  EXPECT_EQ(index_pairs(match_personas(m, 0.5)), (Pairs{{0, 0}, {1, 1}}));
  const auto wide = matrix({{0.9, 0.9, 0.9}});
  EXPECT_EQ(index_pairs(match_personas(wide, 0.5)), (Pairs{{0, 0}}));
  EXPECT_EQ(brute_force_match(wide, 0.5), match_personas(wide, 0.5));
}

TEST(Match, ThresholdIsInclusive) {
  const auto m = matrix({{0.8}});
  EXPECT_EQ(match_personas(m, 0.8).pairs.size(), 1u);
  EXPECT_EQ(match_personas(m, 0.8000001).pairs.size(), 0u);
}

TEST(Match, NegativeSimilaritiesAtZeroThreshold) {
  const auto m = matrix({{-0.5, 0.0}, {0.2, -1.0}});
  const auto o = match_personas(m, 0.0);
  EXPECT_EQ(index_pairs(o), (Pairs{{0, 1}, {1, 0}}));
}

TEST(Match, PairsCarrySimilarity) {
  const auto m = matrix({{0.2, 0.95}, {0.85, 0.3}});
  const auto o = match_personas(m, 0.5);
  ASSERT_EQ(o.pairs.size(), 2u);
  EXPECT_EQ(o.pairs[0], (MatchedPair{0, 1, 0.95}));
  EXPECT_EQ(o.pairs[1], (MatchedPair{1, 0, 0.85}));
}

TEST(BruteForce, OneByOneAgrees) {
  for (double v : {-0.3, 0.2, 0.79, 0.8, 1.0}) {
    const auto m = matrix({{v}});
    EXPECT_EQ(brute_force_match(m, 0.8), match_personas(m, 0.8)) << v;
  }
}

TEST(BruteForce, SizeBound) {
  std::vector<double> v89(8 * 9, 0.5), v99(9 * 9, 0.5);
  for (std::size_t i = 0; i < v89.size(); ++i) v89[i] = 0.5 + 0.001 * static_cast<double>(i % 17);
  const SimilarityMatrix m89(8, 9, v89);
  EXPECT_EQ(brute_force_match(m89, 0.508).pairs.size(), match_personas(m89, 0.508).pairs.size());
  EXPECT_THROW(brute_force_match(SimilarityMatrix(9, 9, v99), 0.0), TooLarge);
  EXPECT_NO_THROW(brute_force_match(SimilarityMatrix(9, 2, std::vector<double>(18, 0.9)), 0.5));
}

TEST(Match, LargeInputIsExact) {
  // 40x40 with a planted permutation: the solver must recover it.
  const std::size_t n = 40;
  std::vector<double> values(n * n, 0.1);
  for (std::size_t r = 0; r < n; ++r) values[r * n + (r * 7 + 3) % n] = 0.9;
  const auto o = match_personas(SimilarityMatrix(n, n, values), 0.5);
  ASSERT_EQ(o.pairs.size(), n);
  for (const auto& p : o.pairs) EXPECT_EQ(p.target, (p.extracted * 7 + 3) % n);
}
