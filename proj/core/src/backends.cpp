#include "persona_eval/backends.hpp"

#include <cmath>
#include <unordered_set>

#include "persona_eval/errors.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

bool is_valid(const PersonaProbabilities& p) {
  for (double v : {p.bot_0, p.bot_1, p.neutral}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return std::abs(p.bot_0 + p.bot_1 + p.neutral - 1.0) <= 1e-6;
}

std::string_view to_string(PersonaLabel l) {
  switch (l) {
    case PersonaLabel::bot_0:
      return "bot_0";
    case PersonaLabel::bot_1:
      return "bot_1";
    case PersonaLabel::neutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<PersonaLabel> parse_label(std::string_view s) {
  if (s == "bot_0") return PersonaLabel::bot_0;
  if (s == "bot_1") return PersonaLabel::bot_1;
  if (s == "neutral") return PersonaLabel::neutral;
  return std::nullopt;
}

PersonaLabel argmax(const PersonaProbabilities& p) {
  if (p.neutral >= p.bot_0 && p.neutral >= p.bot_1) return PersonaLabel::neutral;
  return p.bot_0 >= p.bot_1 ? PersonaLabel::bot_0 : PersonaLabel::bot_1;
}

EmbeddingVector StubEmbedder::embed(std::string_view raw) const {
  if (text::is_blank(raw)) throw EmptyText("cannot embed empty text");
  const auto cps = text::decode_utf8(text::to_lower(raw));
  std::vector<double> buckets(kDimension, 0.0);
  auto add_gram = [&](std::u32string_view gram) {
    const auto bytes = text::encode_utf8(gram);
    buckets[text::fnv1a64(bytes) % kDimension] += 1.0;
  };
  if (cps.size() < 3) {
    add_gram(cps);
  } else {
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) add_gram(std::u32string_view(cps).substr(i, 3));
  }
  double norm = 0.0;
  for (double v : buckets) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : buckets) v /= norm;
  return EmbeddingVector{std::move(buckets)};
}

std::vector<EmbeddingVector> StubEmbedder::embed_texts(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

PersonaProbabilities StubClassifier::classify_persona(std::string_view dialogue_text,
                                                      std::string_view persona) const {
  if (text::is_blank(dialogue_text) || text::is_blank(persona)) {
    throw EmptyText("classifier inputs must be non-empty");
  }
  std::array<std::unordered_set<std::string>, 2> speaker_tokens;
  std::optional<Participant> current;
  std::size_t pos = 0;
  while (pos <= dialogue_text.size()) {
    auto nl = dialogue_text.find('\n', pos);
    if (nl == std::string_view::npos) nl = dialogue_text.size();
    auto line = dialogue_text.substr(pos, nl - pos);
    pos = nl + 1;
    const auto colon = line.find(':');
    if (colon != std::string_view::npos) {
      if (auto p = parse_participant(text::trim(line.substr(0, colon)))) {
        current = p;
        line = line.substr(colon + 1);
      }
    }
    if (!current) continue;
    for (auto& tok : text::tokenize(line)) speaker_tokens[static_cast<std::size_t>(*current)].insert(std::move(tok));
  }

  std::unordered_set<std::string> persona_tokens;
  for (auto& tok : text::tokenize(persona)) persona_tokens.insert(std::move(tok));
  std::array<std::size_t, 2> overlap{0, 0};
  for (const auto& tok : persona_tokens) {
    for (std::size_t s = 0; s < 2; ++s) overlap[s] += speaker_tokens[s].contains(tok) ? 1 : 0;
  }

  if (overlap[0] > overlap[1]) return {0.8, 0.1, 0.1};
  if (overlap[1] > overlap[0]) return {0.1, 0.8, 0.1};
  return {0.1, 0.1, 0.8};
}

std::vector<double> StubGrammarScorer::grammar_scores(std::span<const std::string> sentences) const {
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (text::is_blank(s)) throw EmptyText("cannot score empty sentence");
    out.push_back(s.find(kBadMarker) == std::string::npos ? 1.0 : 0.0);
  }
  return out;
}

std::vector<std::string> StubTranslator::translate_texts(std::span<const std::string> texts,
                                                         std::string_view source,
                                                         std::string_view target) const {
  if (source == target) {
    throw UnsupportedLanguagePair("source and target language are both '" + std::string(source) + "'");
  }
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (text::is_blank(t)) throw EmptyText("cannot translate empty text");
    out.push_back(std::string(kMarker) + t);
  }
  return out;
}

void validate(const BackendConfig& c) {
  if (c.kind == BackendKind::remote && text::is_blank(c.endpoint)) {
    throw InvalidArgument("remote backend requires an endpoint");
  }
  if (c.max_batch == 0) throw InvalidArgument("max_batch must be positive");
  if (c.max_in_flight == 0) throw InvalidArgument("max_in_flight must be positive");
}

std::unique_ptr<Embedder> make_embedder(const BackendConfig& c) {
  validate(c);
  if (c.kind == BackendKind::stub) return std::make_unique<StubEmbedder>();
  return std::make_unique<RemoteEmbedder>(c);
}

std::unique_ptr<PersonaClassifier> make_classifier(const BackendConfig& c) {
  validate(c);
  if (c.kind == BackendKind::stub) return std::make_unique<StubClassifier>();
  return std::make_unique<RemoteClassifier>(c);
}

std::unique_ptr<GrammarScorer> make_grammar_scorer(const BackendConfig& c) {
  validate(c);
  if (c.kind == BackendKind::stub) return std::make_unique<StubGrammarScorer>();
  return std::make_unique<RemoteGrammarScorer>(c);
}

std::unique_ptr<Translator> make_translator(const BackendConfig& c) {
  validate(c);
  if (c.kind == BackendKind::stub) return std::make_unique<StubTranslator>();
  return std::make_unique<RemoteTranslator>(c);
}

}  // namespace persona_eval
