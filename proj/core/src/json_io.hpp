#pragma once

// JSON conversions shared by the report writer and the annotation service.

#include "json.hpp"
#include "persona_eval/matching.hpp"
#include "persona_eval/metrics.hpp"

namespace persona_eval::detail {

inline nlohmann::json counts_to_json(const MetricCounts& c) {
  return {{"matched_extracted", c.matched_extracted},
          {"matched_target", c.matched_target},
          {"classified", c.classified},
          {"total_extracted", c.total_extracted},
          {"total_target", c.total_target}};
}

inline MetricCounts counts_from_json(const nlohmann::json& j) {
  MetricCounts c;
  c.matched_extracted = j.at("matched_extracted").get<std::size_t>();
  c.matched_target = j.at("matched_target").get<std::size_t>();
  c.classified = j.at("classified").get<std::size_t>();
  c.total_extracted = j.at("total_extracted").get<std::size_t>();
  c.total_target = j.at("total_target").get<std::size_t>();
  return c;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
  return {{"scope", to_string(r.scope)},
          {"counts", counts_to_json(r.counts)},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"samples", r.samples},
          {"skipped", r.skipped}};
}

inline nlohmann::json outcome_to_json(const MatchOutcome& o) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : o.pairs) pairs.push_back({p.extracted, p.target, p.similarity});
  return {{"pairs", std::move(pairs)},
          {"unmatched_extracted", o.unmatched_extracted},
          {"unmatched_target", o.unmatched_target}};
}

inline MatchOutcome outcome_from_json(const nlohmann::json& j) {
  MatchOutcome o;
  for (const auto& p : j.at("pairs")) {
    o.pairs.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>(), p.at(2).get<double>()});
  }
  o.unmatched_extracted = j.at("unmatched_extracted").get<std::vector<std::size_t>>();
  o.unmatched_target = j.at("unmatched_target").get<std::vector<std::size_t>>();
  return o;
}

}  // namespace persona_eval::detail
