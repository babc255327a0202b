#include "persona_eval/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "json_io.hpp"
#include "persona_eval/errors.hpp"

namespace persona_eval {

using nlohmann::json;

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::micro:
      return "micro";
    case Aggregation::macro:
      return "macro";
    case Aggregation::both:
      return "both";
  }
  return "both";
}

std::string_view to_string(EmptyDenominatorPolicy p) {
  return p == EmptyDenominatorPolicy::error ? "error" : "skip_sample";
}

std::string_view to_string(Rollup r) { return r == Rollup::any_sentence ? "any_sentence" : "all_sentences"; }

std::optional<Aggregation> parse_aggregation(std::string_view s) {
  if (s == "micro") return Aggregation::micro;
  if (s == "macro") return Aggregation::macro;
  if (s == "both") return Aggregation::both;
  return std::nullopt;
}

std::optional<EmptyDenominatorPolicy> parse_policy(std::string_view s) {
  if (s == "error") return EmptyDenominatorPolicy::error;
  if (s == "skip_sample") return EmptyDenominatorPolicy::skip_sample;
  return std::nullopt;
}

std::optional<Rollup> parse_rollup(std::string_view s) {
  if (s == "any_sentence") return Rollup::any_sentence;
  if (s == "all_sentences") return Rollup::all_sentences;
  return std::nullopt;
}

std::string render_evaluation_report(const CorpusEvaluation& eval, const EvalConfig& config, std::string_view name) {
  json doc;
  doc["format"] = 1;
  doc["name"] = name;
  doc["config"] = {{"tau_sim", config.tau_sim},
                   {"tau_cls", config.tau_cls},
                   {"aggregation", to_string(config.aggregation)},
                   {"empty_denominator_policy", to_string(config.empty_denominator_policy)},
                   {"rollup", to_string(config.rollup)}};
  doc["micro"] = eval.micro ? detail::report_to_json(*eval.micro) : json(nullptr);
  doc["macro"] = eval.macro ? detail::report_to_json(*eval.macro) : json(nullptr);
  doc["auxiliary"] = {{"rougeL", eval.mean_lexical.rouge_l}, {"bleu", eval.mean_lexical.bleu}};

  json samples = json::array();
  json fallback = json::array();
  for (std::size_t i = 0; i < eval.samples.size(); ++i) {
    const auto& s = eval.samples[i];
    json row = {{"dialogue_id", s.dialogue_id},
                {"participant", to_string(s.participant)},
                {"counts", detail::counts_to_json(s.counts)},
                {"precision", s.report.precision},
                {"recall", s.report.recall},
                {"f1", s.report.f1},
                {"skipped", s.report.skipped > 0},
                {"match", detail::outcome_to_json(s.outcome)}};
    if (i < eval.lexical.size()) row["lexical"] = {{"rougeL", eval.lexical[i].rouge_l}, {"bleu", eval.lexical[i].bleu}};
    samples.push_back(std::move(row));
    for (const auto& f : s.fallback) {
      fallback.push_back({{"dialogue_id", s.dialogue_id},
                          {"participant", to_string(s.participant)},
                          {"persona_index", f.persona_index},
                          {"persona", f.persona},
                          {"max_similarity", f.max_similarity ? json(*f.max_similarity) : json(nullptr)},
                          {"probability", f.probability},
                          {"decision", f.accepted ? "classified" : "rejected"}});
    }
  }
  doc["samples"] = std::move(samples);
  doc["fallback"] = std::move(fallback);
  return doc.dump(2) + "\n";
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string report_line(const char* label, const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s P=%.3f R=%.3f F1=%.3f  (samples=%zu skipped=%zu)\n", label, r.precision,
                r.recall, r.f1, r.samples, r.skipped);
  return buf;
}

}  // namespace

std::string render_evaluation_summary(const CorpusEvaluation& eval) {
  std::string out;
  if (eval.micro) out += report_line("micro", *eval.micro);
  if (eval.macro) out += report_line("macro", *eval.macro);
  std::size_t classified = 0;
  for (const auto& s : eval.samples) classified += s.counts.classified;
  out += "samples=" + std::to_string(eval.samples.size()) + " classified=" + std::to_string(classified) +
         " rougeL=" + fmt3(eval.mean_lexical.rouge_l) + " bleu=" + fmt3(eval.mean_lexical.bleu) + "\n";
  return out;
}

RunSummary parse_run_summary(std::string_view document, std::string_view scope, std::string_view fallback_name) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  if (!doc.is_object()) throw ParseError(0, "report must be an object");
  RunSummary run;
  run.name = doc.value("name", std::string(fallback_name));
  if (run.name.empty()) run.name = std::string(fallback_name);

  const json* metrics = &doc;
  const auto key = std::string(scope);
  if (doc.contains(key) && doc[key].is_object()) metrics = &doc[key];
  if (!metrics->contains("precision") || !metrics->contains("recall")) {
    throw ParseError(0, "report has no " + key + " precision/recall");
  }
  try {
    run.precision = metrics->at("precision").get<double>();
    run.recall = metrics->at("recall").get<double>();
    run.f1 = metrics->contains("f1") ? metrics->at("f1").get<double>() : f1(run.precision, run.recall);
    if (doc.contains("auxiliary") && doc["auxiliary"].is_object()) {
      for (const auto& [k, v] : doc["auxiliary"].items()) {
        if (v.is_number()) run.auxiliary[k] = v.get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(0, e.what());
  }
  return run;
}

std::string render_comparison_table(std::vector<RunSummary> runs) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) { return a.f1 > b.f1; });

  static constexpr std::array<std::string_view, 6> kKnown = {"P_bert", "R_bert", "F1_bert", "rougeL", "bleu", "meteor"};
  std::vector<std::string> aux_cols;
  for (auto k : kKnown) {
    const bool present = std::any_of(runs.begin(), runs.end(),
                                     [&](const RunSummary& r) { return r.auxiliary.contains(std::string(k)); });
    if (present) aux_cols.emplace_back(k);
  }
  for (const auto& r : runs) {
    for (const auto& [k, _] : r.auxiliary) {
      if (std::find(aux_cols.begin(), aux_cols.end(), k) == aux_cols.end()) aux_cols.push_back(k);
    }
  }

  std::size_t name_width = 5;
  for (const auto& r : runs) name_width = std::max(name_width, r.name.size());

  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("Model", name_width) + "  " + pad("P", 6) + " " + pad("R", 6) + " " + pad("F1↓", 8);
  for (const auto& c : aux_cols) out += " " + pad(c, std::max<std::size_t>(c.size(), 6));
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += "\n";
  for (const auto& r : runs) {
    std::string line = pad(r.name, name_width) + "  " + fmt3(r.precision) + "  " + fmt3(r.recall) + "  " + fmt3(r.f1);
    for (const auto& c : aux_cols) {
      const auto it = r.auxiliary.find(c);
      line += " " + pad(it == r.auxiliary.end() ? "-" : fmt3(it->second), std::max<std::size_t>(c.size(), 6));
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string render_manual_vs_automatic(const MetricReport& manual, const MetricReport& automatic) {
  std::string out = "Annotation  P      R      F1\n";
  out += "Manual      " + fmt3(manual.precision) + "  " + fmt3(manual.recall) + "  " + fmt3(manual.f1) + "\n";
  out += "Automatic   " + fmt3(automatic.precision) + "  " + fmt3(automatic.recall) + "  " + fmt3(automatic.f1) + "\n";
  return out;
}

}  // namespace persona_eval
