#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persona_eval/backends.hpp"

namespace persona_eval {

/// Splits on runs of `.`, `!`, `?` or `…` followed by whitespace or end of
/// text, keeping the delimiter. A lone `.` after a known abbreviation
/// ("mr", "dr", "т.д", ...) does not split. Segments are whitespace-trimmed
/// and never empty.
std::vector<std::string> segment_sentences(std::string_view text);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Row-major matrix of cosine similarities, rows = extracted sentences,
/// cols = target sentences. Values are finite and in [-1, 1].
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t r) const { return std::span(values_).subspan(r * cols_, cols_); }

  SimilarityMatrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

SimilarityMatrix build_similarity_matrix(std::span<const std::string> extracted_sentences,
                                         std::span<const std::string> target_sentences, const Embedder& embedder);

struct MatchedPair {
  std::size_t extracted;
  std::size_t target;
  double similarity;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchOutcome {
  /// Sorted by (extracted, target).
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_extracted;
  std::vector<std::size_t> unmatched_target;

  double total_similarity() const;
  friend bool operator==(const MatchOutcome&, const MatchOutcome&) = default;
};

/// Two matchings whose totals differ by no more than this are tied.
inline constexpr double kTotalSimilarityTolerance = 1e-9;

/// Among one-to-one matchings that only use cells >= tau_sim, returns one of
/// maximum cardinality, then maximum total similarity, then the
/// lexicographically smallest sorted pair list. Exact for any size.
MatchOutcome match_personas(const SimilarityMatrix& matrix, double tau_sim);

inline constexpr std::size_t kBruteForceMaxDimension = 8;

/// Exhaustive reference for match_personas with the same ordering; throws
/// TooLarge when min(rows, cols) exceeds kBruteForceMaxDimension.
MatchOutcome brute_force_match(const SimilarityMatrix& matrix, double tau_sim);

}  // namespace persona_eval
