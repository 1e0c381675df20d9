#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

// Positive is the reference class; abstentions sit outside the 2x2 cells.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t abstain = 0;

  std::size_t total() const { return tp + fp + fn + tn; }

  ConfusionMatrix swapped() const { return {tn, fn, fp, tp, abstain}; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Decision> pred, std::span<const Label> actual) {
  if (pred.size() != actual.size()) {
    throw UsageError("prediction and truth lengths differ: " + std::to_string(pred.size()) +
                     " vs " + std::to_string(actual.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool pos = actual[i] == Label::Positive;
    switch (pred[i]) {
      case Decision::Abstain: ++cm.abstain; break;
      case Decision::Positive: ++(pos ? cm.tp : cm.fp); break;
      case Decision::Negative: ++(pos ? cm.fn : cm.tn); break;
    }
  }
  return cm;
}

inline ConfusionMatrix confusion(std::span<const Label> pred, std::span<const Label> actual) {
  std::vector<Decision> d;
  d.reserve(pred.size());
  for (auto l : pred) d.push_back(to_decision(l));
  return confusion(std::span<const Decision>(d), actual);
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some ratio was 0/0 and set to 0
};

inline PRF prf(const ConfusionMatrix& cm, Label reference = Label::Positive) {
  const auto c = reference == Label::Positive ? cm : cm.swapped();
  PRF r;
  auto ratio = [&](std::size_t num, std::size_t den) {
    if (den == 0) {
      r.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.degenerate = true;
  }
  return r;
}

inline double accuracy(const ConfusionMatrix& cm) {
  return cm.total() ? static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()) : 0.0;
}

inline double macro_f1(const ConfusionMatrix& cm) {
  return 0.5 * (prf(cm, Label::Positive).f1 + prf(cm, Label::Negative).f1);
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  auto side = [&](Label l) {
    auto r = prf(cm, l);
    return nlohmann::json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
                          {"degenerate", r.degenerate}};
  };
  return {{"tp", cm.tp},
          {"fp", cm.fp},
          {"fn", cm.fn},
          {"tn", cm.tn},
          {"abstain", cm.abstain},
          {"total", cm.total()},
          {"accuracy", accuracy(cm)},
          {"macro_f1", macro_f1(cm)},
          {"positive", side(Label::Positive)},
          {"negative", side(Label::Negative)}};
}

// Per-class metrics and the confusion matrix as aligned text.
inline std::string render_metrics(const ConfusionMatrix& cm) {
  auto p = prf(cm, Label::Positive);
  auto n = prf(cm, Label::Negative);
  auto cell = [](std::string s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  std::string out;
  out += cell("", 12) + cell("Positive", 10) + cell("Negative", 10) + '\n';
  out += cell("Precision", 12) + cell(format_fixed(p.precision, 4), 10) +
         cell(format_fixed(n.precision, 4), 10) + '\n';
  out += cell("Recall", 12) + cell(format_fixed(p.recall, 4), 10) +
         cell(format_fixed(n.recall, 4), 10) + '\n';
  out += cell("F1", 12) + cell(format_fixed(p.f1, 4), 10) + cell(format_fixed(n.f1, 4), 10) + '\n';
  out += "Accuracy " + format_fixed(accuracy(cm), 4) + '\n';
  out += '\n' + cell("actual\\pred", 12) + cell("Positive", 10) + cell("Negative", 10) + '\n';
  out += cell("Positive", 12) + cell(std::to_string(cm.tp), 10) + cell(std::to_string(cm.fn), 10) + '\n';
  out += cell("Negative", 12) + cell(std::to_string(cm.fp), 10) + cell(std::to_string(cm.tn), 10) + '\n';
  if (cm.abstain) out += "Abstained " + std::to_string(cm.abstain) + '\n';
  return out;
}

struct PartySentimentRow {
  std::string party;
  std::size_t total = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  int positive_pct = 0;
  int negative_pct = 0;
};

struct PartySentimentTable {
  std::vector<PartySentimentRow> rows;  // by total, descending
  PartySentimentRow all;
};

inline int rounded_pct(std::size_t part, std::size_t total) {
  if (total == 0) return 0;
  return static_cast<int>(std::lround(100.0 * static_cast<double>(part) / static_cast<double>(total)));
}

// Builds the table from per-party (total, positive) counts.
inline PartySentimentTable sentiment_table(
    const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>& counts) {
  PartySentimentTable t;
  t.all.party = "Total";
  for (const auto& [party, c] : counts) {
    if (c.second > c.first) throw DataError("positive count exceeds total for " + party);
    PartySentimentRow r{party, c.first, c.second, c.first - c.second, 0, 0};
    r.positive_pct = rounded_pct(r.positive, r.total);
    r.negative_pct = rounded_pct(r.negative, r.total);
    t.all.total += r.total;
    t.all.positive += r.positive;
    t.all.negative += r.negative;
    t.rows.push_back(r);
  }
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const auto& a, const auto& b) { return a.total > b.total; });
  t.all.positive_pct = rounded_pct(t.all.positive, t.all.total);
  t.all.negative_pct = rounded_pct(t.all.negative, t.all.total);
  return t;
}

inline PartySentimentTable aggregate_sentiment(const DocumentSet& labeled) {
  std::map<Party, std::pair<std::size_t, std::size_t>> counts;
  std::vector<std::string> bad;
  for (const auto& d : labeled.documents) {
    if (!d.label || !d.party) {
      bad.push_back(d.id);
      continue;
    }
    auto& c = counts[*d.party];
    ++c.first;
    if (*d.label == Label::Positive) ++c.second;
  }
  if (!bad.empty()) {
    std::string msg = "unlabeled or untagged documents:";
    for (const auto& id : bad) msg += ' ' + id;
    throw DataError(msg);
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> v;
  for (const auto& [p, c] : counts) v.emplace_back(std::string(to_string(p)), c);
  return sentiment_table(v);
}

inline nlohmann::json to_json(const PartySentimentTable& t) {
  auto row = [](const PartySentimentRow& r) {
    return nlohmann::json{{"party", r.party},
                          {"total", r.total},
                          {"positive", r.positive},
                          {"negative", r.negative},
                          {"positive_pct", r.positive_pct},
                          {"negative_pct", r.negative_pct}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) rows.push_back(row(r));
  return {{"parties", rows}, {"total", row(t.all)}};
}

inline std::string render_table(const PartySentimentTable& t) {
  auto cell = [](std::string s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  auto line = [&](const PartySentimentRow& r) {
    return cell(r.party, 10) + cell(std::to_string(r.total), 10) +
           cell(std::to_string(r.positive), 10) + cell(std::to_string(r.positive_pct) + "%", 6) +
           cell(std::to_string(r.negative), 10) + cell(std::to_string(r.negative_pct) + "%", 6) +
           '\n';
  };
  std::string out = cell("Party", 10) + cell("Total", 10) + cell("Positive", 10) + cell("", 6) +
                    cell("Negative", 10) + cell("", 6) + '\n';
  for (const auto& r : t.rows) out += line(r);
  out += line(t.all);
  return out;
}

}  // namespace polsent
