#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "persona_eval/errors.hpp"
#include "persona_eval/metrics.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty() || ref.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(cand, ref));
  RougeScore s;
  s.precision = lcs / static_cast<double>(cand.size());
  s.recall = lcs / static_cast<double>(ref.size());
  s.f1 = f1(s.precision, s.recall);
  return s;
}

double bleu(std::string_view candidate, std::span<const std::string> references, std::size_t max_n) {
  if (max_n == 0) throw InvalidArgument("bleu: max_n must be >= 1");
  const auto cand = text::tokenize(candidate);
  if (cand.empty() || references.empty()) return 0.0;
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(text::tokenize(r));

  const std::size_t order = std::min(max_n, cand.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const auto cand_counts = count_ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, count] : count_ngrams(r, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    const double total = static_cast<double>(cand.size() - n + 1);
    const double numerator = clipped > 0 ? static_cast<double>(clipped) : kBleuEpsilon;
    log_sum += std::log(numerator / total);
  }
  const double geo_mean = std::exp(log_sum / static_cast<double>(order));

  // Closest reference length; ties go to the shorter reference.
  const auto c = static_cast<long>(cand.size());
  long r = static_cast<long>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<long>(ref.size());
    if (std::labs(len - c) < std::labs(r - c) || (std::labs(len - c) == std::labs(r - c) && len < r)) r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * geo_mean;
}

}  // namespace persona_eval
