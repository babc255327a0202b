#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "persona_eval/datamodel.hpp"
#include "persona_eval/matching.hpp"
#include "persona_eval/metrics.hpp"

namespace persona_eval {

struct AnnotationTask {
  std::size_t task_id = 0;
  std::string dialogue_id;
  Participant participant = Participant::bot_0;
  std::string dialogue_text;
  std::vector<std::string> extracted;
  std::vector<std::string> target;
};

struct AnnotationDecision {
  std::string session_id;
  std::size_t task_id = 0;
  std::string annotator_id;
  /// (extracted index, target index); must be one-to-one and in range.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// ISO-8601 UTC; filled in on submission when empty.
  std::string timestamp;
  /// Free-text notes, e.g. error categories spotted while matching.
  std::string notes;
};

/// Automatic evaluation of one task, kept for the correlation report.
struct AutoResult {
  MetricCounts counts;
  MatchOutcome outcome;
};

using AutoEvaluator = std::function<AutoResult(const Dialogue&, const ExtractionRecord&)>;

struct CorrelationSeries {
  std::string name;
  std::vector<double> manual;
  std::vector<double> automatic;
  /// Empty when a series has zero variance.
  std::optional<double> r;
};

struct CorrelationReport {
  std::size_t sample_size = 0;
  std::vector<CorrelationSeries> series;
  MetricReport manual;
  MetricReport automatic;
};

/// Manual counts: matched_extracted = matched_target = |pairs|, classified 0.
MetricCounts manual_counts(const AnnotationTask& task, const AnnotationDecision& decision);

/// Correlates per-task manual and automatic counts for: Total Extracted
/// Personas; Total Target Personas + Classified Personas; Correctly
/// Extracted Personas + Classified Personas; Matched Target Personas +
/// Classified Personas. Only tasks present in both maps are used.
CorrelationReport correlation_report(const std::vector<AnnotationTask>& tasks,
                                     const std::map<std::size_t, AnnotationDecision>& decisions,
                                     const std::map<std::size_t, AutoResult>& auto_results);

/// Sessions persisted under `root`: one directory per session holding
/// `manifest.json` (tasks and automatic results) and `decisions.log`
/// (append-only JSON lines). Effective decisions are last-write-wins per
/// (task, annotator). Reads may run concurrently; writes are serialized.
class AnnotationStore {
 public:
  /// Opens `root`, replaying every existing session's log.
  explicit AnnotationStore(std::filesystem::path root);

  /// Seeded uniform sample of `sample_size` records. Throws SampleTooLarge.
  std::string create_session(const std::vector<Dialogue>& dialogues, const std::vector<ExtractionRecord>& records,
                             std::size_t sample_size, std::uint64_t seed, const AutoEvaluator& evaluator = {});

  /// Lowest-index task without a decision from `annotator`; nullopt when done.
  std::optional<AnnotationTask> next_task(const std::string& session, const std::string& annotator) const;

  /// Validates and appends to the log. Throws UnknownSession, UnknownTask,
  /// InvalidPairing.
  void submit_decision(AnnotationDecision decision);

  MetricReport manual_metrics(const std::string& session, const std::string& annotator) const;
  CorrelationReport correlation(const std::string& session, const std::string& annotator) const;

  std::vector<std::string> sessions() const;
  std::vector<AnnotationTask> tasks(const std::string& session) const;
  std::optional<AutoResult> auto_result(const std::string& session, std::size_t task_id) const;
  /// Effective decisions of one annotator, keyed by task id.
  std::map<std::size_t, AnnotationDecision> decisions(const std::string& session, const std::string& annotator) const;
  std::size_t log_size(const std::string& session) const;
  std::pair<std::size_t, std::size_t> progress(const std::string& session, const std::string& annotator) const;

 private:
  struct Session {
    std::string id;
    std::vector<AnnotationTask> tasks;
    std::map<std::size_t, AutoResult> auto_results;
    std::size_t log_entries = 0;
    std::map<std::pair<std::string, std::size_t>, AnnotationDecision> effective;
  };

  const Session& get(const std::string& id) const;
  void load_session(const std::filesystem::path& dir);
  void apply(Session& s, AnnotationDecision d);

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

}  // namespace persona_eval
