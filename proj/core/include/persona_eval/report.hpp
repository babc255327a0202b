#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "persona_eval/datamodel.hpp"
#include "persona_eval/metrics.hpp"

namespace persona_eval {

std::string_view to_string(Aggregation a);
std::string_view to_string(EmptyDenominatorPolicy p);
std::string_view to_string(Rollup r);
std::optional<Aggregation> parse_aggregation(std::string_view s);
std::optional<EmptyDenominatorPolicy> parse_policy(std::string_view s);
std::optional<Rollup> parse_rollup(std::string_view s);

/// Evaluation report document: config, micro/macro reports, auxiliary
/// lexical metrics, a per-sample table and the classifier fallback log.
/// Output is a pure function of its inputs (stable key order and number
/// formatting).
std::string render_evaluation_report(const CorpusEvaluation& eval, const EvalConfig& config, std::string_view name);

/// Human-readable summary of the same report.
std::string render_evaluation_summary(const CorpusEvaluation& eval);

/// One row of a cross-run comparison table.
struct RunSummary {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Auxiliary metrics keyed by column name (rougeL, bleu, meteor, ...).
  std::map<std::string, double> auxiliary;
};

/// Reads a report document. `scope` picks "micro" or "macro"; documents that
/// carry top-level precision/recall are accepted as-is. A missing f1 is
/// computed from precision and recall. Throws ParseError.
RunSummary parse_run_summary(std::string_view document, std::string_view scope = "micro",
                             std::string_view fallback_name = "");

/// Columns Model, P, R, F1, then auxiliary metrics in the order
/// P_bert, R_bert, F1_bert, rougeL, bleu, meteor, then any others; rows
/// sorted by F1 descending.
std::string render_comparison_table(std::vector<RunSummary> runs);

/// Manual vs automatic P/R/F1, one row each.
std::string render_manual_vs_automatic(const MetricReport& manual, const MetricReport& automatic);

}  // namespace persona_eval
