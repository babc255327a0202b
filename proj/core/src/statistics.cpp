#include <algorithm>
#include <cmath>
#include <cstdio>

#include "persona_eval/errors.hpp"
#include "persona_eval/metrics.hpp"

namespace persona_eval {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("pearson: series lengths differ");
  if (x.size() < 2) throw LengthMismatch("pearson: need at least two observations");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson: a series has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ClassificationReport classification_report(std::span<const PersonaLabel> predictions,
                                           std::span<const PersonaLabel> gold) {
  if (predictions.size() != gold.size()) throw LengthMismatch("classification_report: length mismatch");
  std::array<std::size_t, 3> tp{}, predicted{}, actual{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto p = static_cast<std::size_t>(predictions[i]);
    const auto g = static_cast<std::size_t>(gold[i]);
    ++predicted[p];
    ++actual[g];
    if (p == g) ++tp[p];
  }
  ClassificationReport rep;
  double f1_sum = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    auto& s = rep.per_label[l];
    s.support = actual[l];
    s.precision = predicted[l] ? static_cast<double>(tp[l]) / static_cast<double>(predicted[l]) : 0.0;
    s.recall = actual[l] ? static_cast<double>(tp[l]) / static_cast<double>(actual[l]) : 0.0;
    s.f1 = f1(s.precision, s.recall);
    f1_sum += s.f1;
  }
  rep.macro_f1 = f1_sum / 3.0;
  return rep;
}

ClassificationReport classification_report(std::span<const std::string> predictions,
                                           std::span<const std::string> gold) {
  auto convert = [](std::span<const std::string> in) {
    std::vector<PersonaLabel> out;
    out.reserve(in.size());
    for (const auto& s : in) {
      const auto l = parse_label(s);
      if (!l) throw UnknownLabel("unknown label '" + s + "'");
      out.push_back(*l);
    }
    return out;
  };
  if (predictions.size() != gold.size()) throw LengthMismatch("classification_report: length mismatch");
  const auto p = convert(predictions);
  const auto g = convert(gold);
  return classification_report(std::span<const PersonaLabel>(p), std::span<const PersonaLabel>(g));
}

std::string ClassificationReport::render() const {
  std::string out = "Label    Precision  Recall  F1    Support\n";
  char line[96];
  for (auto l : {PersonaLabel::bot_0, PersonaLabel::bot_1, PersonaLabel::neutral}) {
    const auto& s = (*this)[l];
    std::snprintf(line, sizeof line, "%-8s %-10.2f %-7.2f %-5.2f %zu\n", std::string(to_string(l)).c_str(),
                  s.precision, s.recall, s.f1, s.support);
    out += line;
  }
  std::snprintf(line, sizeof line, "macro F1 %.2f\n", macro_f1);
  out += line;
  return out;
}

}  // namespace persona_eval
