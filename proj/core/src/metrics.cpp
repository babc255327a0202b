#include "persona_eval/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <unordered_map>

#include "persona_eval/dataset_tools.hpp"
#include "persona_eval/errors.hpp"

namespace persona_eval {

void validate(const MetricCounts& c) {
  if (c.matched_extracted > c.total_extracted) throw InvalidArgument("matched_extracted exceeds total_extracted");
  if (c.matched_target > c.total_target) throw InvalidArgument("matched_target exceeds total_target");
  if (c.matched_extracted + c.classified > c.total_extracted) {
    throw InvalidArgument("matched_extracted + classified exceeds total_extracted");
  }
}

double precision(const MetricCounts& c) {
  if (c.total_extracted == 0) throw EmptyDenominator("precision: no extracted personas");
  return static_cast<double>(c.matched_extracted + c.classified) / static_cast<double>(c.total_extracted);
}

double recall(const MetricCounts& c) {
  const auto denom = c.total_target + c.classified;
  if (denom == 0) throw EmptyDenominator("recall: no target or classified personas");
  return static_cast<double>(c.matched_target + c.classified) / static_cast<double>(denom);
}

double f1(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

bool has_empty_denominator(const MetricCounts& c) {
  return c.total_extracted == 0 || c.total_target + c.classified == 0;
}

std::string_view to_string(ReportScope s) {
  switch (s) {
    case ReportScope::sample:
      return "sample";
    case ReportScope::corpus_micro:
      return "corpus_micro";
    case ReportScope::corpus_macro:
      return "corpus_macro";
  }
  return "sample";
}

namespace {

MetricReport score_counts(const MetricCounts& c, EmptyDenominatorPolicy policy, ReportScope scope) {
  MetricReport rep;
  rep.counts = c;
  rep.scope = scope;
  if (has_empty_denominator(c)) {
    if (policy == EmptyDenominatorPolicy::error) {
      // Surface the precise failing ratio.
      (void)precision(c);
      (void)recall(c);
    }
    rep.skipped = 1;
    rep.precision = c.total_extracted == 0 ? 0.0 : precision(c);
    rep.recall = c.total_target + c.classified == 0 ? 0.0 : recall(c);
  } else {
    rep.precision = precision(c);
    rep.recall = recall(c);
  }
  rep.f1 = f1(rep.precision, rep.recall);
  return rep;
}

}  // namespace

MetricReport score_sample(const MetricCounts& c, EmptyDenominatorPolicy policy) {
  validate(c);
  return score_counts(c, policy, ReportScope::sample);
}

MetricReport aggregate(std::span<const MetricCounts> samples, Aggregation mode, EmptyDenominatorPolicy policy) {
  if (samples.empty()) throw EmptyInput("aggregate: no samples");
  if (mode == Aggregation::both) throw InvalidArgument("aggregate: choose micro or macro");

  MetricCounts total;
  std::size_t skipped = 0;
  for (const auto& c : samples) {
    validate(c);
    if (has_empty_denominator(c)) {
      if (policy == EmptyDenominatorPolicy::error) (void)score_counts(c, policy, ReportScope::sample);
      ++skipped;
    }
    total += c;
  }

  MetricReport rep;
  if (mode == Aggregation::micro) {
    rep = score_counts(total, policy, ReportScope::corpus_micro);
  } else {
    rep.scope = ReportScope::corpus_macro;
    rep.counts = total;
    double p_sum = 0.0, r_sum = 0.0;
    std::size_t used = 0;
    for (const auto& c : samples) {
      if (has_empty_denominator(c)) continue;
      p_sum += precision(c);
      r_sum += recall(c);
      ++used;
    }
    if (used > 0) {
      rep.precision = p_sum / static_cast<double>(used);
      rep.recall = r_sum / static_cast<double>(used);
      rep.f1 = f1(rep.precision, rep.recall);
    }
  }
  rep.samples = samples.size();
  rep.skipped = skipped;
  return rep;
}

SampleEvaluation evaluate_sample(const Dialogue& dialogue, const ExtractionRecord& record, const Embedder& embedder,
                                 const PersonaClassifier& classifier, const EvalConfig& config) {
  validate(config);
  if (record.dialogue_id != dialogue.id) {
    throw ValidationError(record.dialogue_id, "record does not belong to dialogue '" + dialogue.id + "'");
  }
  const auto& targets = dialogue.personas(record.participant);

  SampleEvaluation ev;
  ev.dialogue_id = dialogue.id;
  ev.participant = record.participant;

  auto segment_all = [](const std::vector<std::string>& personas, std::vector<std::string>& sentences,
                        std::vector<std::size_t>& owner) {
    for (std::size_t i = 0; i < personas.size(); ++i) {
      for (auto& s : segment_sentences(personas[i])) {
        sentences.push_back(std::move(s));
        owner.push_back(i);
      }
    }
  };
  segment_all(record.extracted, ev.extracted_sentences, ev.extracted_owner);
  segment_all(targets, ev.target_sentences, ev.target_owner);

  ev.matrix = build_similarity_matrix(ev.extracted_sentences, ev.target_sentences, embedder);
  ev.outcome = match_personas(ev.matrix, config.tau_sim);

  auto rollup = [&](std::size_t n_personas, const std::vector<std::size_t>& owner, auto sentence_matched) {
    std::vector<std::size_t> matched(n_personas, 0), total(n_personas, 0);
    for (std::size_t s = 0; s < owner.size(); ++s) {
      ++total[owner[s]];
      if (sentence_matched(s)) ++matched[owner[s]];
    }
    std::vector<bool> out(n_personas, false);
    for (std::size_t i = 0; i < n_personas; ++i) {
      out[i] = config.rollup == Rollup::any_sentence ? matched[i] > 0 : (total[i] > 0 && matched[i] == total[i]);
    }
    return out;
  };
  std::vector<bool> row_matched(ev.extracted_sentences.size(), false), col_matched(ev.target_sentences.size(), false);
  for (const auto& p : ev.outcome.pairs) {
    row_matched[p.extracted] = true;
    col_matched[p.target] = true;
  }
  ev.extracted_matched =
      rollup(record.extracted.size(), ev.extracted_owner, [&](std::size_t s) { return row_matched[s]; });
  ev.target_matched = rollup(targets.size(), ev.target_owner, [&](std::size_t s) { return col_matched[s]; });

  MetricCounts c;
  c.total_extracted = record.extracted.size();
  c.total_target = targets.size();
  c.matched_extracted = static_cast<std::size_t>(std::count(ev.extracted_matched.begin(), ev.extracted_matched.end(), true));
  c.matched_target = static_cast<std::size_t>(std::count(ev.target_matched.begin(), ev.target_matched.end(), true));

  std::string rendered;
  for (std::size_t i = 0; i < record.extracted.size(); ++i) {
    if (ev.extracted_matched[i]) continue;
    if (rendered.empty()) rendered = render_dialogue(dialogue);
    FallbackDecision fd;
    fd.persona_index = i;
    fd.persona = record.extracted[i];
    if (ev.matrix.cols() > 0) {
      for (std::size_t s = 0; s < ev.extracted_owner.size(); ++s) {
        if (ev.extracted_owner[s] != i) continue;
        const auto row = ev.matrix.row(s);
        const double m = *std::max_element(row.begin(), row.end());
        fd.max_similarity = fd.max_similarity ? std::max(*fd.max_similarity, m) : m;
      }
    }
    fd.probabilities = classifier.classify_persona(rendered, record.extracted[i]);
    if (!is_valid(fd.probabilities)) throw BadResponse("classifier returned an invalid distribution");
    fd.probability = fd.probabilities.of(record.participant);
    fd.accepted = fd.probability >= config.tau_cls;
    if (fd.accepted) ++c.classified;
    ev.fallback.push_back(std::move(fd));
  }

  ev.counts = c;
  ev.report = score_sample(c, config.empty_denominator_policy);
  return ev;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace

CorpusEvaluation evaluate_corpus(const std::vector<Dialogue>& dialogues, const std::vector<ExtractionRecord>& records,
                                 const Embedder& embedder, const PersonaClassifier& classifier,
                                 const EvalConfig& config, std::size_t jobs) {
  validate(config);
  std::unordered_map<std::string_view, const Dialogue*> by_id;
  for (const auto& d : dialogues) by_id.emplace(d.id, &d);
  for (const auto& r : records) {
    if (!by_id.contains(r.dialogue_id)) throw ValidationError(r.dialogue_id, "extraction references unknown dialogue");
  }

  CorpusEvaluation out;
  out.samples.resize(records.size());
  out.lexical.resize(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        const auto& d = *by_id.at(records[i].dialogue_id);
        out.samples[i] = evaluate_sample(d, records[i], embedder, classifier, config);
        const auto cand = join(records[i].extracted);
        const std::vector<std::string> refs{join(d.personas(records[i].participant))};
        out.lexical[i] = {rouge_l(cand, refs[0]).f1, bleu(cand, refs)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(records.size(), 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (!records.empty()) {
    std::vector<MetricCounts> counts;
    counts.reserve(records.size());
    for (const auto& s : out.samples) counts.push_back(s.counts);
    if (config.aggregation != Aggregation::macro) {
      out.micro = aggregate(counts, Aggregation::micro, config.empty_denominator_policy);
    }
    if (config.aggregation != Aggregation::micro) {
      out.macro = aggregate(counts, Aggregation::macro, config.empty_denominator_policy);
    }
    for (const auto& l : out.lexical) {
      out.mean_lexical.rouge_l += l.rouge_l;
      out.mean_lexical.bleu += l.bleu;
    }
    out.mean_lexical.rouge_l /= static_cast<double>(records.size());
    out.mean_lexical.bleu /= static_cast<double>(records.size());
  }
  return out;
}

}  // namespace persona_eval
