#include "persona_eval/datamodel.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/random.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

bool in_unit_interval(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::vector<std::string> require_string_array(const json& v, const std::string& what, std::size_t line) {
  if (!v.is_array()) throw ParseError(line, what + " must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) throw ParseError(line, what + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Calls `on_record` for every non-header, non-blank line.
template <typename F>
void for_each_record(std::istream& in, F&& on_record) {
  std::string raw;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (text::is_blank(raw)) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record must be an object");
    if (!seen_content && obj.size() == 1 && obj.contains("format")) {
      seen_content = true;
      if (!obj["format"].is_number_integer() || obj["format"].get<int>() != kFormatVersion) {
        throw ParseError(line_no, "unsupported format version");
      }
      continue;
    }
    seen_content = true;
    on_record(obj, line_no);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

}  // namespace

std::string_view to_string(Participant p) { return p == Participant::bot_0 ? "bot_0" : "bot_1"; }

std::optional<Participant> parse_participant(std::string_view s) {
  if (s == "bot_0") return Participant::bot_0;
  if (s == "bot_1") return Participant::bot_1;
  return std::nullopt;
}

void validate(const Dialogue& d) {
  if (text::is_blank(d.id)) throw ValidationError(d.id, "empty id");
  if (d.turns.empty()) throw ValidationError(d.id, "dialogue has no turns");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const auto sp = static_cast<unsigned>(d.turns[i].speaker);
    if (sp > 1) throw ValidationError(d.id, "turn " + std::to_string(i) + " has an unknown speaker");
    if (text::is_blank(d.turns[i].text)) throw ValidationError(d.id, "turn " + std::to_string(i) + " is empty");
  }
  for (auto p : kParticipants) {
    for (const auto& persona : d.personas(p)) {
      if (text::is_blank(persona)) {
        throw ValidationError(d.id, "empty persona for " + std::string(to_string(p)));
      }
    }
  }
}

void validate(const ExtractionRecord& r) {
  if (text::is_blank(r.dialogue_id)) throw ValidationError(r.dialogue_id, "empty dialogue_id");
  for (const auto& e : r.extracted) {
    if (text::is_blank(e)) throw ValidationError(r.dialogue_id, "empty extracted persona");
  }
}

void validate(const EvalConfig& c) {
  if (!in_unit_interval(c.tau_sim)) throw InvalidArgument("tau_sim must be in [0,1]");
  if (!in_unit_interval(c.tau_gram)) throw InvalidArgument("tau_gram must be in [0,1]");
  if (!in_unit_interval(c.tau_cls)) throw InvalidArgument("tau_cls must be in [0,1]");
}

std::vector<Dialogue> read_dialogues(std::istream& in) {
  std::vector<Dialogue> out;
  std::unordered_set<std::string> ids;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    Dialogue d;
    d.id = require_string(obj, "id", line);
    d.language = require_string(obj, "language", line);
    const auto turns = obj.find("turns");
    if (turns == obj.end() || !turns->is_array()) throw ParseError(line, "missing array field 'turns'");
    for (const auto& t : *turns) {
      if (!t.is_object()) throw ParseError(line, "turn must be an object");
      const auto speaker = require_string(t, "speaker", line);
      const auto p = parse_participant(speaker);
      if (!p) throw ValidationError(d.id, "unknown speaker '" + speaker + "'");
      d.turns.push_back(Turn{*p, require_string(t, "text", line)});
    }
    const auto personas = obj.find("personas");
    if (personas == obj.end() || !personas->is_object()) throw ParseError(line, "missing object field 'personas'");
    for (auto p : kParticipants) {
      const auto key = std::string(to_string(p));
      const auto it = personas->find(key);
      if (it == personas->end()) throw ValidationError(d.id, "personas missing participant " + key);
      d.personas(p) = require_string_array(*it, "personas." + key, line);
    }
    for (const auto& [key, _] : personas->items()) {
      if (!parse_participant(key)) throw ValidationError(d.id, "unknown participant '" + key + "' in personas");
    }
    validate(d);
    if (!ids.insert(d.id).second) throw DuplicateId(d.id);
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dialogues(in);
}

void write_dialogues(std::ostream& out, const std::vector<Dialogue>& dialogues) {
  out << json{{"format", kFormatVersion}}.dump() << '\n';
  for (const auto& d : dialogues) {
    json turns = json::array();
    for (const auto& t : d.turns) turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
    json rec = {{"id", d.id},
                {"language", d.language},
                {"turns", std::move(turns)},
                {"personas", {{"bot_0", d.personas(Participant::bot_0)}, {"bot_1", d.personas(Participant::bot_1)}}}};
    out << rec.dump() << '\n';
  }
}

void save_dialogues(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues) {
  auto out = open_output(path);
  write_dialogues(out, dialogues);
}

std::vector<ExtractionRecord> read_extractions(std::istream& in) {
  std::vector<ExtractionRecord> out;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    ExtractionRecord r;
    r.dialogue_id = require_string(obj, "dialogue_id", line);
    const auto participant = require_string(obj, "participant", line);
    const auto p = parse_participant(participant);
    if (!p) throw ValidationError(r.dialogue_id, "unknown participant '" + participant + "'");
    r.participant = *p;
    const auto it = obj.find("extracted");
    if (it == obj.end()) throw ParseError(line, "missing array field 'extracted'");
    r.extracted = require_string_array(*it, "extracted", line);
    validate(r);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<ExtractionRecord> load_extractions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_extractions(in);
}

void write_extractions(std::ostream& out, const std::vector<ExtractionRecord>& records) {
  out << json{{"format", kFormatVersion}}.dump() << '\n';
  for (const auto& r : records) {
    json rec = {{"dialogue_id", r.dialogue_id}, {"participant", to_string(r.participant)}, {"extracted", r.extracted}};
    out << rec.dump() << '\n';
  }
}

void save_extractions(const std::filesystem::path& path, const std::vector<ExtractionRecord>& records) {
  auto out = open_output(path);
  write_extractions(out, records);
}

void check_references(const std::vector<ExtractionRecord>& records, const std::vector<Dialogue>& dialogues) {
  std::unordered_set<std::string_view> ids;
  for (const auto& d : dialogues) ids.insert(d.id);
  for (const auto& r : records) {
    if (!ids.contains(r.dialogue_id)) throw ValidationError(r.dialogue_id, "extraction references unknown dialogue");
  }
}

std::size_t test_split_size(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidFraction("test_fraction must be in (0,1)");
  return static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
}

DatasetSplit split_dataset(const std::vector<Dialogue>& dialogues, double test_fraction, std::uint64_t seed) {
  const auto n_test = test_split_size(dialogues.size(), test_fraction);
  if (dialogues.empty()) throw InvalidArgument("cannot split an empty dataset");
  std::vector<std::size_t> order(dialogues.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  DeterministicRng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  DatasetSplit split;
  split.test.reserve(n_test);
  split.train.reserve(dialogues.size() - n_test);
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_test ? split.test : split.train).push_back(dialogues[order[k]]);
  }
  return split;
}

}  // namespace persona_eval
