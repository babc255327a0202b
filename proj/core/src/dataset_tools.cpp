#include "persona_eval/dataset_tools.hpp"

#include <algorithm>
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

std::string render_dialogue(const Dialogue& dialogue) {
  std::string out;
  for (const auto& t : dialogue.turns) {
    if (!out.empty()) out += '\n';
    out += to_string(t.speaker);
    out += ": ";
    out += t.text;
  }
  return out;
}

std::string build_extraction_prompt(const Dialogue& dialogue, Participant participant) {
  return render_dialogue(dialogue) + "\n\nFacts about " + std::string(to_string(participant)) + ":";
}

namespace {

constexpr std::uint64_t kPositiveStream = 1;
constexpr std::uint64_t kHostStream = 2;
constexpr std::uint64_t kNeutralStreamBase = 1000;
constexpr int kRejectionTries = 64;

struct PoolEntry {
  std::size_t dialogue;
  const std::string* persona;
};

// Keeps `k` of `items`, chosen by a seeded shuffle, in original order.
template <typename T>
std::vector<T> subsample(std::vector<T> items, std::size_t k, DeterministicRng& rng) {
  if (items.size() <= k) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(k);
  for (auto i : idx) out.push_back(std::move(items[i]));
  return out;
}

}  // namespace

std::vector<ClassifierExample> build_classifier_dataset(const std::vector<Dialogue>& dialogues, std::uint64_t seed) {
  if (dialogues.size() < 2) throw TooFewDialogues("need at least two dialogues to sample neutral personas");

  std::vector<std::string> rendered;
  rendered.reserve(dialogues.size());
  for (const auto& d : dialogues) rendered.push_back(render_dialogue(d));

  std::array<std::vector<ClassifierExample>, 2> positives;
  std::vector<PoolEntry> pool;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    for (auto p : kParticipants) {
      for (const auto& persona : dialogues[i].personas(p)) {
        positives[static_cast<std::size_t>(p)].push_back(
            {rendered[i], persona, p == Participant::bot_0 ? PersonaLabel::bot_0 : PersonaLabel::bot_1});
        pool.push_back({i, &persona});
      }
    }
  }

  const std::size_t per_label = std::min(positives[0].size(), positives[1].size());
  DeterministicRng positive_rng(DeterministicRng::derive(seed, kPositiveStream));
  std::vector<ClassifierExample> out;
  out.reserve(3 * per_label);
  for (auto& group : positives) {
    for (auto& ex : subsample(std::move(group), per_label, positive_rng)) out.push_back(std::move(ex));
  }

  std::vector<std::size_t> hosts(dialogues.size());
  std::iota(hosts.begin(), hosts.end(), std::size_t{0});
  DeterministicRng host_rng(DeterministicRng::derive(seed, kHostStream));
  host_rng.shuffle(std::span<std::size_t>(hosts));

  std::size_t cursor = 0;
  for (std::size_t n = 0; n < per_label; ++n) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < hosts.size() && !placed; ++attempt, ++cursor) {
      const std::size_t host = hosts[cursor % hosts.size()];
      const auto& own0 = dialogues[host].personas(Participant::bot_0);
      const auto& own1 = dialogues[host].personas(Participant::bot_1);
      auto eligible = [&](const PoolEntry& e) {
        return e.dialogue != host && std::find(own0.begin(), own0.end(), *e.persona) == own0.end() &&
               std::find(own1.begin(), own1.end(), *e.persona) == own1.end();
      };
      DeterministicRng rng(DeterministicRng::derive(seed, kNeutralStreamBase + n));
      const PoolEntry* pick = nullptr;
      for (int t = 0; t < kRejectionTries && !pick; ++t) {
        const auto& e = pool[rng.below(pool.size())];
        if (eligible(e)) pick = &e;
      }
      if (!pick) {
        std::vector<const PoolEntry*> candidates;
        for (const auto& e : pool) {
          if (eligible(e)) candidates.push_back(&e);
        }
        if (!candidates.empty()) pick = candidates[rng.below(candidates.size())];
      }
      if (pick) {
        out.push_back({rendered[host], *pick->persona, PersonaLabel::neutral});
        placed = true;
      }
    }
    if (!placed) throw TooFewDialogues("no dialogue can donate a neutral persona");
  }
  return out;
}

void write_classifier_dataset(std::ostream& out, const std::vector<ClassifierExample>& examples) {
  out << json{{"format", 1}}.dump() << '\n';
  for (const auto& e : examples) {
    out << json{{"dialogue", e.dialogue_text}, {"persona", e.persona}, {"label", to_string(e.label)}}.dump() << '\n';
  }
}

std::vector<ClassifierExample> read_classifier_dataset(std::istream& in) {
  std::vector<ClassifierExample> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (text::is_blank(raw)) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    if (obj.contains("format") && obj.size() == 1) continue;
    if (!obj.is_object() || !obj.value("dialogue", json()).is_string() || !obj.value("persona", json()).is_string() ||
        !obj.value("label", json()).is_string()) {
      throw ParseError(line, "expected {dialogue, persona, label}");
    }
    const auto label = parse_label(obj["label"].get<std::string>());
    if (!label) throw ParseError(line, "unknown label");
    out.push_back({obj["dialogue"].get<std::string>(), obj["persona"].get<std::string>(), *label});
  }
  return out;
}

}  // namespace persona_eval
