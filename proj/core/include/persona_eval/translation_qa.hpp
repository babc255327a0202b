#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "persona_eval/backends.hpp"
#include "persona_eval/datamodel.hpp"

namespace persona_eval {

enum class UnitKind { utterance, persona };

std::string_view to_string(UnitKind k);

/// A translatable unit. For utterances `index` is the turn index; for
/// personas it indexes bot_0's list followed by bot_1's list.
struct UnitId {
  std::string dialogue_id;
  UnitKind kind = UnitKind::utterance;
  std::size_t index = 0;

  friend auto operator<=>(const UnitId&, const UnitId&) = default;
  friend bool operator==(const UnitId&, const UnitId&) = default;
};

struct FailingSentence {
  std::size_t sentence_index;
  double score;

  friend bool operator==(const FailingSentence&, const FailingSentence&) = default;
};

struct CorruptionVerdict {
  UnitId unit;
  std::vector<FailingSentence> failing_sentences;

  bool corrupted() const noexcept { return !failing_sentences.empty(); }
  friend bool operator==(const CorruptionVerdict&, const CorruptionVerdict&) = default;
};

/// Segments `text`, scores every sentence in one batch and flags the ones
/// scoring below tau_gram.
CorruptionVerdict detect_corrupted(std::string_view text, const GrammarScorer& scorer, double tau_gram,
                                   UnitId unit = {});

/// Original-language text per unit, with the language it is written in.
class SourceTexts {
 public:
  SourceTexts() = default;
  /// Builds the lookup from an original-language copy of the dataset.
  static SourceTexts from_dialogues(const std::vector<Dialogue>& originals);

  void add(UnitId unit, std::string text, std::string language);
  const std::string* find(const UnitId& unit) const;
  const std::string* language_of(const UnitId& unit) const;

 private:
  struct Entry {
    std::string text;
    std::string language;
  };
  std::map<UnitId, Entry> entries_;
};

struct RepairResult {
  std::vector<Dialogue> dialogues;
  std::vector<CorruptionVerdict> verdicts;
};

/// Replaces every corrupted unit with the translator's output for its
/// original source text (whole unit, not just the failing sentence).
/// Verdicts cover every unit, in dataset order. Throws MissingSourceText.
RepairResult repair_dataset(const std::vector<Dialogue>& dialogues, const GrammarScorer& scorer,
                            const Translator& translator, const SourceTexts& sources, double tau_gram);

struct CorruptionStats {
  UnitKind kind;
  std::size_t total = 0;
  std::size_t corrupted = 0;

  /// corrupted / total; 0 when total is 0.
  double ratio() const noexcept;
};

/// One entry per kind, utterances first.
std::vector<CorruptionStats> corruption_stats(const std::vector<CorruptionVerdict>& verdicts);

/// Table with columns All, Corrupted, Ratio; ratio to two decimals, "n/a"
/// for an empty kind.
std::string render_corruption_table(const std::vector<CorruptionStats>& stats);

void write_verdicts(std::ostream& out, const std::vector<CorruptionVerdict>& verdicts);
std::vector<CorruptionVerdict> read_verdicts(std::istream& in);

}  // namespace persona_eval
