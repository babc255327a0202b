#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "persona_eval/backends.hpp"
#include "persona_eval/datamodel.hpp"

namespace persona_eval {

/// One "<speaker>: <text>" line per turn, joined with '\n'.
std::string render_dialogue(const Dialogue& dialogue);

/// Rendered transcript, a blank line, then "Facts about <participant>:".
std::string build_extraction_prompt(const Dialogue& dialogue, Participant participant);

struct ClassifierExample {
  std::string dialogue_text;
  std::string persona;
  PersonaLabel label;

  friend bool operator==(const ClassifierExample&, const ClassifierExample&) = default;
};

/// Positive examples come from each dialogue's own persona lists; neutral
/// examples pair a dialogue with a persona drawn uniformly from the other
/// dialogues' pools (never one of the host's own personas). The larger
/// positive class is subsampled so that all three labels have the same count.
/// Deterministic in `seed`. Throws TooFewDialogues for fewer than two.
std::vector<ClassifierExample> build_classifier_dataset(const std::vector<Dialogue>& dialogues, std::uint64_t seed);

void write_classifier_dataset(std::ostream& out, const std::vector<ClassifierExample>& examples);
std::vector<ClassifierExample> read_classifier_dataset(std::istream& in);

}  // namespace persona_eval
