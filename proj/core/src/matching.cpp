#include "persona_eval/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "assignment.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

namespace {

constexpr std::array<std::u32string_view, 15> kAbbreviations = {
    U"mr", U"mrs", U"ms", U"dr", U"prof", U"st", U"jr", U"sr", U"vs", U"e.g", U"i.e",
    U"т.д", U"т.п", U"т.е", U"т.к"};

bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x2026; }

bool is_opening_punct(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == U'(' || cp == U'[' || cp == 0x00AB || cp == 0x201C || cp == 0x201E;
}

// Word immediately before position `end`, lowercased, leading quotes removed.
std::u32string word_before(const std::u32string& cps, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && !text::is_space(cps[begin - 1])) --begin;
  while (begin < end && is_opening_punct(cps[begin])) ++begin;
  std::u32string word(cps.begin() + static_cast<std::ptrdiff_t>(begin), cps.begin() + static_cast<std::ptrdiff_t>(end));
  for (auto& cp : word) cp = text::to_lower(cp);
  return word;
}

bool is_abbreviation(std::u32string_view word) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

void push_segment(std::vector<std::string>& out, const std::u32string& cps, std::size_t begin, std::size_t end) {
  const auto encoded = text::encode_utf8(std::u32string_view(cps).substr(begin, end - begin));
  const auto seg = text::trim(encoded);
  if (!seg.empty()) out.emplace_back(seg);
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view input) {
  std::vector<std::string> out;
  const auto cps = text::decode_utf8(input);
  std::size_t seg_start = 0;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_terminal(cps[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < cps.size() && is_terminal(cps[run_end])) ++run_end;
    const bool at_boundary = run_end == cps.size() || text::is_space(cps[run_end]);
    const bool single_period = run_end - i == 1 && cps[i] == U'.';
    if (at_boundary && !(single_period && is_abbreviation(word_before(cps, i)))) {
      push_segment(out, cps, seg_start, run_end);
      seg_start = run_end;
    }
    i = run_end;
  }
  push_segment(out, cps, seg_start, cps.size());
  return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionMismatch("embedding dimensions differ: " + std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw ZeroVector("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) throw InvalidArgument("similarity matrix size mismatch");
  for (double& v : values_) {
    if (!std::isfinite(v) || v < -1.0 - 1e-9 || v > 1.0 + 1e-9) {
      throw InvalidArgument("similarity values must be finite and within [-1, 1]");
    }
    v = std::clamp(v, -1.0, 1.0);
  }
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  std::vector<double> t(values_.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = at(r, c);
  }
  return SimilarityMatrix(cols_, rows_, std::move(t));
}

SimilarityMatrix build_similarity_matrix(std::span<const std::string> extracted_sentences,
                                         std::span<const std::string> target_sentences, const Embedder& embedder) {
  const auto rows = extracted_sentences.size();
  const auto cols = target_sentences.size();
  if (rows == 0 || cols == 0) return SimilarityMatrix(rows, cols, {});
  const auto left = embedder.embed_texts(extracted_sentences);
  const auto right = embedder.embed_texts(target_sentences);
  if (left.size() != rows || right.size() != cols) throw BadResponse("embedder returned the wrong number of vectors");
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& l : left) {
    for (const auto& r : right) values.push_back(cosine_similarity(l, r));
  }
  return SimilarityMatrix(rows, cols, std::move(values));
}

double MatchOutcome::total_similarity() const {
  double total = 0.0;
  for (const auto& p : pairs) total += p.similarity;
  return total;
}

namespace {

MatchOutcome make_outcome(const SimilarityMatrix& m, std::vector<MatchedPair> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return std::pair(a.extracted, a.target) < std::pair(b.extracted, b.target);
  });
  MatchOutcome out;
  std::vector<bool> row_used(m.rows(), false), col_used(m.cols(), false);
  for (const auto& p : pairs) {
    row_used[p.extracted] = true;
    col_used[p.target] = true;
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!row_used[r]) out.unmatched_extracted.push_back(r);
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (!col_used[c]) out.unmatched_target.push_back(c);
  }
  out.pairs = std::move(pairs);
  return out;
}

// Every admissible pair is worth `bonus + similarity`; with bonus larger than
// the spread of any total similarity, maximum weight orders matchings by
// cardinality first and total similarity second.
class AssignmentSolver {
 public:
  AssignmentSolver(const SimilarityMatrix& m, double tau) : m_(m), tau_(tau) {
    bonus_ = 2.0 * static_cast<double>(std::min(m.rows(), m.cols())) + 3.0;
  }

  bool admissible(std::size_t r, std::size_t c) const { return m_.at(r, c) >= tau_; }
  double weight(std::size_t r, std::size_t c) const { return bonus_ + m_.at(r, c); }

  struct Solution {
    double weight = 0.0;
    std::vector<MatchedPair> pairs;
  };

  // Best matching restricted to rows/cols not flagged as excluded.
  Solution solve(const std::vector<bool>& row_excluded, const std::vector<bool>& col_excluded) const {
    std::vector<std::size_t> rows, cols;
    for (std::size_t r = 0; r < m_.rows(); ++r) {
      if (!row_excluded[r]) rows.push_back(r);
    }
    for (std::size_t c = 0; c < m_.cols(); ++c) {
      if (!col_excluded[c]) cols.push_back(c);
    }
    const std::size_t n = std::max(rows.size(), cols.size());
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (admissible(rows[i], cols[j])) w[i * n + j] = weight(rows[i], cols[j]);
      }
    }
    const auto a = detail::max_weight_assignment(w, n);
    Solution s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto j = a.column_of_row[i];
      if (j < cols.size() && admissible(rows[i], cols[j])) {
        s.pairs.push_back({rows[i], cols[j], m_.at(rows[i], cols[j])});
        s.weight += weight(rows[i], cols[j]);
      }
    }
    return s;
  }

 private:
  const SimilarityMatrix& m_;
  double tau_;
  double bonus_;
};

}  // namespace

MatchOutcome match_personas(const SimilarityMatrix& matrix, double tau_sim) {
  if (matrix.rows() == 0 || matrix.cols() == 0) return make_outcome(matrix, {});
  const AssignmentSolver solver(matrix, tau_sim);
  std::vector<bool> row_fixed(matrix.rows(), false), col_fixed(matrix.cols(), false);
  const auto best = solver.solve(row_fixed, col_fixed);
  const std::size_t cardinality = best.pairs.size();
  const double tol = kTotalSimilarityTolerance;

  // Lexicographic tie-break: scan admissible pairs in (row, col) order and
  // keep a pair whenever the optimum is still reachable with it fixed.
  std::vector<MatchedPair> chosen;
  double fixed_weight = 0.0;
  for (std::size_t r = 0; r < matrix.rows() && chosen.size() < cardinality; ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (col_fixed[c] || !solver.admissible(r, c)) continue;
      row_fixed[r] = col_fixed[c] = true;
      const auto rest = solver.solve(row_fixed, col_fixed);
      const double w = fixed_weight + solver.weight(r, c) + rest.weight;
      if (chosen.size() + 1 + rest.pairs.size() == cardinality && w >= best.weight - tol) {
        chosen.push_back({r, c, matrix.at(r, c)});
        fixed_weight += solver.weight(r, c);
        break;
      }
      row_fixed[r] = col_fixed[c] = false;
    }
  }
  return make_outcome(matrix, std::move(chosen));
}

namespace {

bool pair_less(const MatchedPair& a, const MatchedPair& b) {
  return std::pair(a.extracted, a.target) < std::pair(b.extracted, b.target);
}

// Enumerates every injective partial assignment from the smaller side.
// Pairs are always stored in (extracted, target) orientation.
struct BruteForceSearch {
  const SimilarityMatrix& m;
  double tau;
  bool by_columns;
  std::vector<bool> used;
  std::vector<MatchedPair> current;
  double current_total = 0.0;
  std::vector<MatchedPair> best;
  double best_total = 0.0;
  bool have_best = false;

  BruteForceSearch(const SimilarityMatrix& matrix, double tau_sim)
      : m(matrix), tau(tau_sim), by_columns(matrix.rows() > matrix.cols()),
        used(by_columns ? matrix.rows() : matrix.cols(), false) {}

  bool better_than_best(std::vector<MatchedPair>& sorted) const {
    std::sort(sorted.begin(), sorted.end(), pair_less);
    if (!have_best) return true;
    if (sorted.size() != best.size()) return sorted.size() > best.size();
    if (current_total > best_total + kTotalSimilarityTolerance) return true;
    if (current_total < best_total - kTotalSimilarityTolerance) return false;
    return std::lexicographical_compare(sorted.begin(), sorted.end(), best.begin(), best.end(), pair_less);
  }

  void visit(std::size_t k) {
    const std::size_t outer = by_columns ? m.cols() : m.rows();
    const std::size_t inner = by_columns ? m.rows() : m.cols();
    if (k == outer) {
      auto sorted = current;
      if (better_than_best(sorted)) {
        best = std::move(sorted);
        best_total = current_total;
        have_best = true;
      }
      return;
    }
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t r = by_columns ? j : k;
      const std::size_t c = by_columns ? k : j;
      if (used[j] || m.at(r, c) < tau) continue;
      used[j] = true;
      current.push_back({r, c, m.at(r, c)});
      current_total += m.at(r, c);
      visit(k + 1);
      current_total -= m.at(r, c);
      current.pop_back();
      used[j] = false;
    }
    visit(k + 1);
  }
};

}  // namespace

MatchOutcome brute_force_match(const SimilarityMatrix& matrix, double tau_sim) {
  if (std::min(matrix.rows(), matrix.cols()) > kBruteForceMaxDimension) {
    throw TooLarge("brute_force_match supports min(rows, cols) <= " + std::to_string(kBruteForceMaxDimension));
  }
  BruteForceSearch search(matrix, tau_sim);
  search.visit(0);
  return make_outcome(matrix, std::move(search.best));
}

}  // namespace persona_eval
