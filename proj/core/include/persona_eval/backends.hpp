#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persona_eval/datamodel.hpp"

namespace persona_eval {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

struct PersonaProbabilities {
  double bot_0 = 0.0;
  double bot_1 = 0.0;
  double neutral = 0.0;

  double of(Participant p) const noexcept { return p == Participant::bot_0 ? bot_0 : bot_1; }
  friend bool operator==(const PersonaProbabilities&, const PersonaProbabilities&) = default;
};

/// Each component in [0,1] and the sum within 1e-6 of one.
bool is_valid(const PersonaProbabilities& p);

enum class PersonaLabel { bot_0, bot_1, neutral };

std::string_view to_string(PersonaLabel l);
std::optional<PersonaLabel> parse_label(std::string_view s);
/// Ties resolve toward neutral, then bot_0.
PersonaLabel argmax(const PersonaProbabilities& p);

// Capabilities. Implementations must be safe to call concurrently.

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per input, in input order. Throws EmptyText on blank input.
  virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const = 0;
};

class PersonaClassifier {
 public:
  virtual ~PersonaClassifier() = default;
  /// `dialogue_text` is a rendered transcript ("bot_0: ..." lines).
  virtual PersonaProbabilities classify_persona(std::string_view dialogue_text, std::string_view persona) const = 0;
};

class GrammarScorer {
 public:
  virtual ~GrammarScorer() = default;
  virtual std::vector<double> grammar_scores(std::span<const std::string> sentences) const = 0;
};

class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::vector<std::string> translate_texts(std::span<const std::string> texts, std::string_view source,
                                                   std::string_view target) const = 0;
};

// Deterministic stubs.

/// Character-trigram feature hashing: lowercase, slide a window of three code
/// points (texts shorter than three code points form a single gram), hash the
/// gram's UTF-8 bytes with FNV-1a 64, add one to bucket `hash % 256`, then
/// L2-normalize.
class StubEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDimension = 256;
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const override;
  EmbeddingVector embed(std::string_view text) const;
};

/// Token-overlap classifier: the persona's distinct tokens are counted
/// against each speaker's tokens in the rendered transcript. A strict winner
/// gets 0.8 and the other two classes 0.1 each; zero or tied overlap gives
/// neutral 0.8.
class StubClassifier final : public PersonaClassifier {
 public:
  PersonaProbabilities classify_persona(std::string_view dialogue_text, std::string_view persona) const override;
};

/// Scores 0.0 for sentences containing the marker token, 1.0 otherwise.
class StubGrammarScorer final : public GrammarScorer {
 public:
  static constexpr std::string_view kBadMarker = "<BAD>";
  std::vector<double> grammar_scores(std::span<const std::string> sentences) const override;
};

/// Prefixes every text with "[tx]".
class StubTranslator final : public Translator {
 public:
  static constexpr std::string_view kMarker = "[tx]";
  std::vector<std::string> translate_texts(std::span<const std::string> texts, std::string_view source,
                                           std::string_view target) const override;
};

// Remote clients speaking the JSON-over-HTTP wire protocol.

enum class BackendKind { stub, remote };

struct BackendConfig {
  BackendKind kind = BackendKind::stub;
  /// Base URL, e.g. "http://127.0.0.1:8080" or "http://host/prefix".
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 64;
  std::size_t max_in_flight = 4;
  /// Sent as "Authorization: Bearer <token>" when set.
  std::optional<std::string> bearer_token;
};

void validate(const BackendConfig& c);

std::unique_ptr<Embedder> make_embedder(const BackendConfig& c);
std::unique_ptr<PersonaClassifier> make_classifier(const BackendConfig& c);
std::unique_ptr<GrammarScorer> make_grammar_scorer(const BackendConfig& c);
std::unique_ptr<Translator> make_translator(const BackendConfig& c);

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(BackendConfig config);
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const override;

 private:
  BackendConfig config_;
};

class RemoteClassifier final : public PersonaClassifier {
 public:
  explicit RemoteClassifier(BackendConfig config);
  PersonaProbabilities classify_persona(std::string_view dialogue_text, std::string_view persona) const override;

 private:
  BackendConfig config_;
};

class RemoteGrammarScorer final : public GrammarScorer {
 public:
  explicit RemoteGrammarScorer(BackendConfig config);
  std::vector<double> grammar_scores(std::span<const std::string> sentences) const override;

 private:
  BackendConfig config_;
};

class RemoteTranslator final : public Translator {
 public:
  explicit RemoteTranslator(BackendConfig config);
  std::vector<std::string> translate_texts(std::span<const std::string> texts, std::string_view source,
                                           std::string_view target) const override;

 private:
  BackendConfig config_;
};

}  // namespace persona_eval
