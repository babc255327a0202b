#include "persona_eval/translation_qa.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/matching.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

using nlohmann::json;

std::string_view to_string(UnitKind k) { return k == UnitKind::utterance ? "utterance" : "persona"; }

namespace {

std::vector<CorruptionVerdict> detect_many(const std::vector<std::pair<UnitId, const std::string*>>& units,
                                           const GrammarScorer& scorer, double tau_gram) {
  std::vector<std::string> sentences;
  std::vector<std::size_t> first(units.size() + 1, 0);
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (text::is_blank(*units[u].second)) throw EmptyText("cannot check an empty unit");
    for (auto& s : segment_sentences(*units[u].second)) sentences.push_back(std::move(s));
    first[u + 1] = sentences.size();
  }
  const auto scores = sentences.empty() ? std::vector<double>{} : scorer.grammar_scores(sentences);
  if (scores.size() != sentences.size()) throw BadResponse("grammar scorer returned the wrong number of scores");

  std::vector<CorruptionVerdict> out;
  out.reserve(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    CorruptionVerdict v{units[u].first, {}};
    for (std::size_t s = first[u]; s < first[u + 1]; ++s) {
      if (scores[s] < tau_gram) v.failing_sentences.push_back({s - first[u], scores[s]});
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Visits every unit of `d` in canonical order.
template <typename F>
void for_each_unit(Dialogue& d, F&& fn) {
  for (std::size_t i = 0; i < d.turns.size(); ++i) fn(UnitId{d.id, UnitKind::utterance, i}, d.turns[i].text);
  std::size_t idx = 0;
  for (auto p : kParticipants) {
    for (auto& persona : d.personas(p)) fn(UnitId{d.id, UnitKind::persona, idx++}, persona);
  }
}

}  // namespace

CorruptionVerdict detect_corrupted(std::string_view text_in, const GrammarScorer& scorer, double tau_gram,
                                   UnitId unit) {
  const std::string owned(text_in);
  return detect_many({{std::move(unit), &owned}}, scorer, tau_gram).front();
}

SourceTexts SourceTexts::from_dialogues(const std::vector<Dialogue>& originals) {
  SourceTexts s;
  for (auto d : originals) {
    const auto lang = d.language;
    for_each_unit(d, [&](UnitId id, std::string& t) { s.add(std::move(id), t, lang); });
  }
  return s;
}

void SourceTexts::add(UnitId unit, std::string text, std::string language) {
  entries_.insert_or_assign(std::move(unit), Entry{std::move(text), std::move(language)});
}

const std::string* SourceTexts::find(const UnitId& unit) const {
  const auto it = entries_.find(unit);
  return it == entries_.end() ? nullptr : &it->second.text;
}

const std::string* SourceTexts::language_of(const UnitId& unit) const {
  const auto it = entries_.find(unit);
  return it == entries_.end() ? nullptr : &it->second.language;
}

RepairResult repair_dataset(const std::vector<Dialogue>& dialogues, const GrammarScorer& scorer,
                            const Translator& translator, const SourceTexts& sources, double tau_gram) {
  RepairResult result;
  result.dialogues = dialogues;

  std::vector<std::pair<UnitId, const std::string*>> units;
  std::vector<std::string*> slots;
  std::vector<std::size_t> owner;
  for (std::size_t di = 0; di < result.dialogues.size(); ++di) {
    for_each_unit(result.dialogues[di], [&](UnitId id, std::string& t) {
      units.emplace_back(std::move(id), &t);
      slots.push_back(&t);
      owner.push_back(di);
    });
  }
  result.verdicts = detect_many(units, scorer, tau_gram);

  // Batch corrupted units per language pair.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> batches;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (!result.verdicts[u].corrupted()) continue;
    const auto& id = result.verdicts[u].unit;
    if (!sources.find(id)) {
      throw MissingSourceText("no source text for " + id.dialogue_id + "/" + std::string(to_string(id.kind)) + "/" +
                              std::to_string(id.index));
    }
    batches[{*sources.language_of(id), result.dialogues[owner[u]].language}].push_back(u);
  }
  for (const auto& [langs, members] : batches) {
    std::vector<std::string> originals;
    originals.reserve(members.size());
    for (auto u : members) originals.push_back(*sources.find(result.verdicts[u].unit));
    auto translated = translator.translate_texts(originals, langs.first, langs.second);
    if (translated.size() != members.size()) throw BadResponse("translator returned the wrong number of texts");
    for (std::size_t k = 0; k < members.size(); ++k) *slots[members[k]] = std::move(translated[k]);
  }
  return result;
}

double CorruptionStats::ratio() const noexcept {
  return total == 0 ? 0.0 : static_cast<double>(corrupted) / static_cast<double>(total);
}

std::vector<CorruptionStats> corruption_stats(const std::vector<CorruptionVerdict>& verdicts) {
  std::vector<CorruptionStats> out{{UnitKind::utterance}, {UnitKind::persona}};
  for (const auto& v : verdicts) {
    auto& s = out[v.unit.kind == UnitKind::utterance ? 0 : 1];
    ++s.total;
    if (v.corrupted()) ++s.corrupted;
  }
  return out;
}

std::string render_corruption_table(const std::vector<CorruptionStats>& stats) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %10s %10s %6s\n", "", "All", "Corrupted", "Ratio");
  out += line;
  for (const auto& s : stats) {
    char ratio[16];
    if (s.total == 0) {
      std::snprintf(ratio, sizeof ratio, "n/a");
    } else {
      std::snprintf(ratio, sizeof ratio, "%.2f", s.ratio());
    }
    std::snprintf(line, sizeof line, "%-12s %10zu %10zu %6s\n", s.kind == UnitKind::utterance ? "Utterances" : "Personas",
                  s.total, s.corrupted, ratio);
    out += line;
  }
  return out;
}

void write_verdicts(std::ostream& out, const std::vector<CorruptionVerdict>& verdicts) {
  out << json{{"format", 1}}.dump() << '\n';
  for (const auto& v : verdicts) {
    json failing = json::array();
    for (const auto& f : v.failing_sentences) failing.push_back({{"sentence", f.sentence_index}, {"score", f.score}});
    out << json{{"dialogue_id", v.unit.dialogue_id},
                {"kind", to_string(v.unit.kind)},
                {"index", v.unit.index},
                {"corrupted", v.corrupted()},
                {"failing", std::move(failing)}}
               .dump()
        << '\n';
  }
}

std::vector<CorruptionVerdict> read_verdicts(std::istream& in) {
  std::vector<CorruptionVerdict> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (text::is_blank(raw)) continue;
    try {
      const auto obj = json::parse(raw);
      if (obj.contains("format") && obj.size() == 1) continue;
      CorruptionVerdict v;
      v.unit.dialogue_id = obj.at("dialogue_id").get<std::string>();
      const auto kind = obj.at("kind").get<std::string>();
      if (kind != "utterance" && kind != "persona") throw ParseError(line, "unknown unit kind '" + kind + "'");
      v.unit.kind = kind == "utterance" ? UnitKind::utterance : UnitKind::persona;
      v.unit.index = obj.at("index").get<std::size_t>();
      for (const auto& f : obj.at("failing")) {
        v.failing_sentences.push_back({f.at("sentence").get<std::size_t>(), f.at("score").get<double>()});
      }
      out.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

}  // namespace persona_eval
