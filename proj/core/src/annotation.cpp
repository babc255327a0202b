#include "persona_eval/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json_io.hpp"
#include "persona_eval/dataset_tools.hpp"
#include "persona_eval/errors.hpp"
#include "persona_eval/random.hpp"
#include "persona_eval/text.hpp"

namespace persona_eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kLog = "decisions.log";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json decision_to_json(const AnnotationDecision& d) {
  json pairs = json::array();
  for (const auto& [e, t] : d.pairs) pairs.push_back({e, t});
  return {{"task_id", d.task_id},
          {"annotator", d.annotator_id},
          {"pairs", std::move(pairs)},
          {"timestamp", d.timestamp},
          {"notes", d.notes}};
}

AnnotationDecision decision_from_json(const json& j, const std::string& session) {
  AnnotationDecision d;
  d.session_id = session;
  d.task_id = j.at("task_id").get<std::size_t>();
  d.annotator_id = j.at("annotator").get<std::string>();
  for (const auto& p : j.at("pairs")) d.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
  d.timestamp = j.value("timestamp", std::string());
  d.notes = j.value("notes", std::string());
  return d;
}

void check_pairing(const AnnotationTask& task, const AnnotationDecision& d) {
  std::set<std::size_t> rows, cols;
  for (const auto& [e, t] : d.pairs) {
    if (e >= task.extracted.size() || t >= task.target.size()) {
      throw InvalidPairing("pair (" + std::to_string(e) + ", " + std::to_string(t) + ") out of range");
    }
    if (!rows.insert(e).second) throw InvalidPairing("extracted index " + std::to_string(e) + " used twice");
    if (!cols.insert(t).second) throw InvalidPairing("target index " + std::to_string(t) + " used twice");
  }
}

}  // namespace

MetricCounts manual_counts(const AnnotationTask& task, const AnnotationDecision& decision) {
  MetricCounts c;
  c.matched_extracted = decision.pairs.size();
  c.matched_target = decision.pairs.size();
  c.total_extracted = task.extracted.size();
  c.total_target = task.target.size();
  return c;
}

CorrelationReport correlation_report(const std::vector<AnnotationTask>& tasks,
                                     const std::map<std::size_t, AnnotationDecision>& decisions,
                                     const std::map<std::size_t, AutoResult>& auto_results) {
  CorrelationReport rep;
  rep.series = {{"Total Extracted Personas", {}, {}, std::nullopt},
                {"Total Target Personas + Classified Personas", {}, {}, std::nullopt},
                {"Correctly Extracted Personas + Classified Personas", {}, {}, std::nullopt},
                {"Matched Target Personas + Classified Personas", {}, {}, std::nullopt}};
  std::vector<MetricCounts> manual, automatic;
  for (const auto& task : tasks) {
    const auto d = decisions.find(task.task_id);
    const auto a = auto_results.find(task.task_id);
    if (d == decisions.end() || a == auto_results.end()) continue;
    const auto m = manual_counts(task, d->second);
    const auto& ac = a->second.counts;
    const std::array<std::pair<double, double>, 4> values = {{
        {m.total_extracted, ac.total_extracted},
        {m.total_target + m.classified, ac.total_target + ac.classified},
        {m.matched_extracted + m.classified, ac.matched_extracted + ac.classified},
        {m.matched_target + m.classified, ac.matched_target + ac.classified},
    }};
    for (std::size_t s = 0; s < values.size(); ++s) {
      rep.series[s].manual.push_back(values[s].first);
      rep.series[s].automatic.push_back(values[s].second);
    }
    manual.push_back(m);
    automatic.push_back(ac);
  }
  if (manual.empty()) throw NoDecisions("no decided tasks with automatic results");
  rep.sample_size = manual.size();
  for (auto& s : rep.series) {
    try {
      s.r = pearson(s.manual, s.automatic);
    } catch (const ZeroVariance&) {
      s.r.reset();
    } catch (const LengthMismatch&) {
      s.r.reset();
    }
  }
  rep.manual = aggregate(manual, Aggregation::micro, EmptyDenominatorPolicy::skip_sample);
  rep.automatic = aggregate(automatic, Aggregation::micro, EmptyDenominatorPolicy::skip_sample);
  return rep;
}

AnnotationStore::AnnotationStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifest)) load_session(entry.path());
  }
}

void AnnotationStore::load_session(const fs::path& dir) {
  std::ifstream in(dir / kManifest, std::ios::binary);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, (dir / kManifest).string() + ": " + e.what());
  }
  auto s = std::make_unique<Session>();
  s->id = manifest.at("session_id").get<std::string>();
  for (const auto& t : manifest.at("tasks")) {
    AnnotationTask task;
    task.task_id = t.at("task_id").get<std::size_t>();
    task.dialogue_id = t.at("dialogue_id").get<std::string>();
    task.participant = parse_participant(t.at("participant").get<std::string>()).value_or(Participant::bot_0);
    task.dialogue_text = t.at("dialogue").get<std::string>();
    task.extracted = t.at("extracted").get<std::vector<std::string>>();
    task.target = t.at("target").get<std::vector<std::string>>();
    if (t.contains("auto") && !t["auto"].is_null()) {
      s->auto_results[task.task_id] = {detail::counts_from_json(t["auto"].at("counts")),
                                       detail::outcome_from_json(t["auto"].at("outcome"))};
    }
    s->tasks.push_back(std::move(task));
  }
  std::ifstream log(dir / kLog, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      apply(*s, decision_from_json(json::parse(line), s->id));
    } catch (const json::exception& e) {
      // A torn final line from an interrupted write is dropped.
      if (log.peek() == std::char_traits<char>::eof()) break;
      throw ParseError(line_no, (dir / kLog).string() + ": " + e.what());
    }
  }
  sessions_[s->id] = std::move(s);
}

void AnnotationStore::apply(Session& s, AnnotationDecision d) {
  ++s.log_entries;
  auto key = std::pair(d.annotator_id, d.task_id);
  s.effective.insert_or_assign(std::move(key), std::move(d));
}

std::string AnnotationStore::create_session(const std::vector<Dialogue>& dialogues,
                                            const std::vector<ExtractionRecord>& records, std::size_t sample_size,
                                            std::uint64_t seed, const AutoEvaluator& evaluator) {
  if (sample_size > records.size()) {
    throw SampleTooLarge("sample_size " + std::to_string(sample_size) + " exceeds " + std::to_string(records.size()) +
                         " records");
  }
  std::unordered_map<std::string_view, const Dialogue*> by_id;
  for (const auto& d : dialogues) by_id.emplace(d.id, &d);

  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  DeterministicRng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());

  auto s = std::make_unique<Session>();
  json tasks = json::array();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& rec = records[idx[k]];
    const auto it = by_id.find(rec.dialogue_id);
    if (it == by_id.end()) throw ValidationError(rec.dialogue_id, "extraction references unknown dialogue");
    const Dialogue& d = *it->second;
    AnnotationTask task{k, d.id, rec.participant, render_dialogue(d), rec.extracted, d.personas(rec.participant)};
    json t = {{"task_id", task.task_id},
              {"dialogue_id", task.dialogue_id},
              {"participant", to_string(task.participant)},
              {"dialogue", task.dialogue_text},
              {"extracted", task.extracted},
              {"target", task.target},
              {"auto", nullptr}};
    if (evaluator) {
      auto result = evaluator(d, rec);
      t["auto"] = {{"counts", detail::counts_to_json(result.counts)},
                   {"outcome", detail::outcome_to_json(result.outcome)}};
      s->auto_results[k] = std::move(result);
    }
    tasks.push_back(std::move(t));
    s->tasks.push_back(std::move(task));
  }

  std::unique_lock lock(mutex_);
  std::size_t n = sessions_.size() + 1;
  do {
    char buf[32];
    std::snprintf(buf, sizeof buf, "session-%04zu", n++);
    s->id = buf;
  } while (sessions_.contains(s->id) || fs::exists(root_ / s->id));

  const auto dir = root_ / s->id;
  fs::create_directories(dir);
  const json manifest = {{"format", 1},
                         {"session_id", s->id},
                         {"seed", seed},
                         {"sample_size", sample_size},
                         {"records_available", records.size()},
                         {"tasks", std::move(tasks)}};
  write_atomically(dir / kManifest, manifest.dump(2) + "\n");
  std::ofstream(dir / kLog, std::ios::binary | std::ios::app).flush();
  const auto id = s->id;
  sessions_[id] = std::move(s);
  return id;
}

const AnnotationStore::Session& AnnotationStore::get(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSession("unknown session '" + id + "'");
  return *it->second;
}

std::optional<AnnotationTask> AnnotationStore::next_task(const std::string& session,
                                                         const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  for (const auto& t : s.tasks) {
    if (!s.effective.contains({annotator, t.task_id})) return t;
  }
  return std::nullopt;
}

void AnnotationStore::submit_decision(AnnotationDecision decision) {
  std::unique_lock lock(mutex_);
  const auto it = sessions_.find(decision.session_id);
  if (it == sessions_.end()) throw UnknownSession("unknown session '" + decision.session_id + "'");
  auto& s = *it->second;
  if (decision.task_id >= s.tasks.size()) {
    throw UnknownTask("unknown task " + std::to_string(decision.task_id) + " in " + s.id);
  }
  if (text::is_blank(decision.annotator_id)) throw InvalidArgument("annotator id must be non-empty");
  check_pairing(s.tasks[decision.task_id], decision);
  if (decision.timestamp.empty()) decision.timestamp = utc_now();

  std::ofstream log(root_ / s.id / kLog, std::ios::binary | std::ios::app);
  log << decision_to_json(decision).dump() << '\n';
  log.flush();
  if (!log) throw InvalidArgument("failed to append decision log for " + s.id);
  apply(s, std::move(decision));
}

std::map<std::size_t, AnnotationDecision> AnnotationStore::decisions(const std::string& session,
                                                                     const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  std::map<std::size_t, AnnotationDecision> out;
  for (const auto& [key, d] : s.effective) {
    if (key.first == annotator) out.emplace(key.second, d);
  }
  return out;
}

MetricReport AnnotationStore::manual_metrics(const std::string& session, const std::string& annotator) const {
  const auto decided = decisions(session, annotator);
  if (decided.empty()) throw NoDecisions("annotator '" + annotator + "' has no decisions in " + session);
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  std::vector<MetricCounts> counts;
  for (const auto& [task_id, d] : decided) counts.push_back(manual_counts(s.tasks[task_id], d));
  return aggregate(counts, Aggregation::micro, EmptyDenominatorPolicy::skip_sample);
}

CorrelationReport AnnotationStore::correlation(const std::string& session, const std::string& annotator) const {
  const auto decided = decisions(session, annotator);
  if (decided.empty()) throw NoDecisions("annotator '" + annotator + "' has no decisions in " + session);
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  return correlation_report(s.tasks, decided, s.auto_results);
}

std::vector<std::string> AnnotationStore::sessions() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::vector<AnnotationTask> AnnotationStore::tasks(const std::string& session) const {
  std::shared_lock lock(mutex_);
  return get(session).tasks;
}

std::optional<AutoResult> AnnotationStore::auto_result(const std::string& session, std::size_t task_id) const {
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  const auto it = s.auto_results.find(task_id);
  if (it == s.auto_results.end()) return std::nullopt;
  return it->second;
}

std::size_t AnnotationStore::log_size(const std::string& session) const {
  std::shared_lock lock(mutex_);
  return get(session).log_entries;
}

std::pair<std::size_t, std::size_t> AnnotationStore::progress(const std::string& session,
                                                              const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const auto& s = get(session);
  std::size_t decided = 0;
  for (const auto& t : s.tasks) decided += s.effective.contains({annotator, t.task_id}) ? 1 : 0;
  return {decided, s.tasks.size()};
}

}  // namespace persona_eval
