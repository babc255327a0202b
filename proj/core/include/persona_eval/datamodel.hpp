#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace persona_eval {

enum class Participant : std::uint8_t { bot_0 = 0, bot_1 = 1 };

inline constexpr std::array<Participant, 2> kParticipants{Participant::bot_0, Participant::bot_1};

std::string_view to_string(Participant p);
std::optional<Participant> parse_participant(std::string_view s);

struct Turn {
  Participant speaker;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string id;
  std::string language;
  std::vector<Turn> turns;
  /// Indexed by participant; a participant without personas has an empty list.
  std::array<std::vector<std::string>, 2> target_personas;

  const std::vector<std::string>& personas(Participant p) const {
    return target_personas[static_cast<std::size_t>(p)];
  }
  std::vector<std::string>& personas(Participant p) { return target_personas[static_cast<std::size_t>(p)]; }

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct ExtractionRecord {
  std::string dialogue_id;
  Participant participant;
  std::vector<std::string> extracted;

  friend bool operator==(const ExtractionRecord&, const ExtractionRecord&) = default;
};

enum class Aggregation { micro, macro, both };
enum class EmptyDenominatorPolicy { error, skip_sample };

/// How sentence-level matches roll up to personas: a persona counts as
/// matched when any (default) or all of its sentences are matched.
enum class Rollup { any_sentence, all_sentences };

struct EvalConfig {
  double tau_sim = 0.8;
  double tau_gram = 0.5;
  double tau_cls = 0.7;
  Aggregation aggregation = Aggregation::both;
  EmptyDenominatorPolicy empty_denominator_policy = EmptyDenominatorPolicy::error;
  Rollup rollup = Rollup::any_sentence;
};

/// Throws ValidationError / InvalidArgument when an invariant is broken.
void validate(const Dialogue& d);
void validate(const ExtractionRecord& r);
void validate(const EvalConfig& c);

/// Dataset files: UTF-8, one JSON record per line, optional `{"format": 1}`
/// header line. Blank lines are ignored.
std::vector<Dialogue> read_dialogues(std::istream& in);
std::vector<Dialogue> load_dialogues(const std::filesystem::path& path);
void write_dialogues(std::ostream& out, const std::vector<Dialogue>& dialogues);
void save_dialogues(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues);

std::vector<ExtractionRecord> read_extractions(std::istream& in);
std::vector<ExtractionRecord> load_extractions(const std::filesystem::path& path);
void write_extractions(std::ostream& out, const std::vector<ExtractionRecord>& records);
void save_extractions(const std::filesystem::path& path, const std::vector<ExtractionRecord>& records);

/// Every record must reference a dialogue in `dialogues`.
void check_references(const std::vector<ExtractionRecord>& records, const std::vector<Dialogue>& dialogues);

struct DatasetSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> test;
};

/// |test| = round-half-up(test_fraction * N) over a seeded shuffle.
std::size_t test_split_size(std::size_t n, double test_fraction);
DatasetSplit split_dataset(const std::vector<Dialogue>& dialogues, double test_fraction, std::uint64_t seed);

}  // namespace persona_eval
