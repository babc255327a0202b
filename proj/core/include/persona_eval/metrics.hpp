#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persona_eval/backends.hpp"
#include "persona_eval/datamodel.hpp"
#include "persona_eval/matching.hpp"

namespace persona_eval {

/// Persona counts behind precision and recall.
///
///   precision = (matched_extracted + classified) / total_extracted
///   recall    = (matched_target + classified) / (total_target + classified)
///
/// `classified` counts unmatched extracted personas that the persona
/// classifier attributes to the evaluated participant. It appears in both
/// the numerator and the denominator of recall, so recall is not monotone
/// in `classified`.
struct MetricCounts {
  std::size_t matched_extracted = 0;
  std::size_t matched_target = 0;
  std::size_t classified = 0;
  std::size_t total_extracted = 0;
  std::size_t total_target = 0;

  MetricCounts& operator+=(const MetricCounts& o) {
    matched_extracted += o.matched_extracted;
    matched_target += o.matched_target;
    classified += o.classified;
    total_extracted += o.total_extracted;
    total_target += o.total_target;
    return *this;
  }
  friend MetricCounts operator+(MetricCounts a, const MetricCounts& b) { return a += b; }
  friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

/// Throws InvalidArgument when a count invariant is broken.
void validate(const MetricCounts& c);

/// Throw EmptyDenominator on a zero denominator.
double precision(const MetricCounts& c);
double recall(const MetricCounts& c);
/// Harmonic mean; 0 when p + r == 0.
double f1(double p, double r);

bool has_empty_denominator(const MetricCounts& c);

enum class ReportScope { sample, corpus_micro, corpus_macro };
std::string_view to_string(ReportScope s);

struct MetricReport {
  MetricCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ReportScope scope = ReportScope::sample;
  /// Samples folded into this report and how many of them were skipped for
  /// a zero denominator (skipped samples report 0 for undefined values).
  std::size_t samples = 1;
  std::size_t skipped = 0;
};

/// Scores a single sample. With the error policy a zero denominator throws;
/// with skip_sample the report is flagged as skipped.
MetricReport score_sample(const MetricCounts& c, EmptyDenominatorPolicy policy);

/// micro: sum counts then score once. macro: mean of per-sample precision and
/// recall over non-skipped samples, F1 of the means. Throws EmptyInput on an
/// empty list.
MetricReport aggregate(std::span<const MetricCounts> samples, Aggregation mode, EmptyDenominatorPolicy policy);

struct FallbackDecision {
  std::size_t persona_index = 0;
  std::string persona;
  /// Best cell over the persona's sentence rows; empty when there are no
  /// target sentences.
  std::optional<double> max_similarity;
  PersonaProbabilities probabilities;
  /// Probability component of the evaluated participant.
  double probability = 0.0;
  bool accepted = false;
};

struct SampleEvaluation {
  std::string dialogue_id;
  Participant participant = Participant::bot_0;

  std::vector<std::string> extracted_sentences;
  std::vector<std::size_t> extracted_owner;  // sentence -> persona index
  std::vector<std::string> target_sentences;
  std::vector<std::size_t> target_owner;

  SimilarityMatrix matrix;
  MatchOutcome outcome;
  std::vector<bool> extracted_matched;  // per persona
  std::vector<bool> target_matched;
  std::vector<FallbackDecision> fallback;
  MetricCounts counts;
  MetricReport report;
};

/// Segment both persona lists, embed, match at tau_sim, roll sentence matches
/// up to personas, run the classifier on every unmatched extracted persona
/// and credit it when the participant's probability reaches tau_cls.
SampleEvaluation evaluate_sample(const Dialogue& dialogue, const ExtractionRecord& record, const Embedder& embedder,
                                 const PersonaClassifier& classifier, const EvalConfig& config);

struct LexicalScores {
  double rouge_l = 0.0;
  double bleu = 0.0;
};

struct CorpusEvaluation {
  std::vector<SampleEvaluation> samples;
  /// Per-sample ROUGE-L F1 and BLEU of the joined persona lists.
  std::vector<LexicalScores> lexical;
  std::optional<MetricReport> micro;
  std::optional<MetricReport> macro;
  LexicalScores mean_lexical;
};

/// Evaluates every record against its dialogue with up to `jobs` workers.
/// Results are in record order regardless of scheduling.
CorpusEvaluation evaluate_corpus(const std::vector<Dialogue>& dialogues, const std::vector<ExtractionRecord>& records,
                                 const Embedder& embedder, const PersonaClassifier& classifier,
                                 const EvalConfig& config, std::size_t jobs = 1);

// Baseline lexical metrics. Tokenisation: lowercase, split on whitespace and
// punctuation.

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeScore rouge_l(std::string_view candidate, std::string_view reference);

inline constexpr double kBleuEpsilon = 1e-9;

/// Sentence BLEU with clipped n-gram precisions, geometric mean over orders
/// 1..min(max_n, |candidate|), and brevity penalty exp(1 - r/c) when the
/// candidate is not longer than the closest reference length r. Zero clipped
/// counts use kBleuEpsilon as numerator.
double bleu(std::string_view candidate, std::span<const std::string> references, std::size_t max_n = 4);

/// Sample Pearson correlation. Throws LengthMismatch (unequal or < 2 values)
/// and ZeroVariance.
double pearson(std::span<const double> x, std::span<const double> y);

struct LabelScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  /// Indexed by PersonaLabel.
  std::array<LabelScores, 3> per_label;
  double macro_f1 = 0.0;

  const LabelScores& operator[](PersonaLabel l) const { return per_label[static_cast<std::size_t>(l)]; }
  /// Columns: Label, Precision, Recall, F1, Support.
  std::string render() const;
};

ClassificationReport classification_report(std::span<const std::string> predictions,
                                           std::span<const std::string> gold);
ClassificationReport classification_report(std::span<const PersonaLabel> predictions,
                                           std::span<const PersonaLabel> gold);

}  // namespace persona_eval
