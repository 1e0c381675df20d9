#include <gtest/gtest.h>

#include "polsent/evalmetrics.hpp"
#include "support.hpp"

using namespace polsent;

namespace {

std::pair<std::vector<Label>, std::vector<Label>> table5_labels() {
  std::vector<Label> pred, actual;
  auto add = [&](Label p, Label a, int n) {
    for (int i = 0; i < n; ++i) {
      pred.push_back(p);
      actual.push_back(a);
    }
  };
  add(Label::Positive, Label::Positive, 150);
  add(Label::Negative, Label::Positive, 31);
  add(Label::Positive, Label::Negative, 14);
  add(Label::Negative, Label::Negative, 177);
  return {pred, actual};
}

}  // namespace

TEST(Confusion, Table5Layout) {
  auto [pred, actual] = table5_labels();
  auto cm = confusion(std::span<const Label>(pred), std::span<const Label>(actual));
  EXPECT_EQ(cm.tp, 150u);
  EXPECT_EQ(cm.fn, 31u);
  EXPECT_EQ(cm.fp, 14u);
  EXPECT_EQ(cm.tn, 177u);
  EXPECT_EQ(cm.total(), 372u);
}

TEST(Confusion, PerfectPredictionHasNoOffDiagonal) {
  std::vector<Label> y{Label::Positive, Label::Negative, Label::Negative};
  auto cm = confusion(std::span<const Label>(y), std::span<const Label>(y));
  EXPECT_EQ(cm.fp + cm.fn, 0u);
  auto p = prf(cm);
  EXPECT_EQ(p.precision, 1.0);
  EXPECT_EQ(p.recall, 1.0);
  EXPECT_EQ(p.f1, 1.0);
}

TEST(Confusion, AbstainCountedOutOfBand) {
  std::vector<Decision> pred{Decision::Positive, Decision::Abstain, Decision::Negative};
  std::vector<Label> actual{Label::Positive, Label::Negative, Label::Positive};
  auto cm = confusion(std::span<const Decision>(pred), std::span<const Label>(actual));
  EXPECT_EQ(cm.abstain, 1u);
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_THROW(confusion(std::span<const Decision>(pred), std::span<const Label>(actual).first(2)), UsageError);
}

TEST(Confusion, InvariantUnderExampleOrder) {
  auto [pred, actual] = table5_labels();
  auto base = confusion(std::span<const Label>(pred), std::span<const Label>(actual));
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(1);
  rng.shuffle(order);
  std::vector<Label> p2, a2;
  for (auto i : order) {
    p2.push_back(pred[i]);
    a2.push_back(actual[i]);
  }
  auto cm = confusion(std::span<const Label>(p2), std::span<const Label>(a2));
  EXPECT_EQ(cm.tp, base.tp);
  EXPECT_EQ(cm.fp, base.fp);
  EXPECT_EQ(cm.fn, base.fn);
  EXPECT_EQ(cm.tn, base.tn);
}

TEST(Prf, Table5PerClass) {
  ConfusionMatrix cm{150, 14, 31, 177, 0};
  auto p = prf(cm, Label::Positive);
  EXPECT_NEAR(p.precision, 0.9146, 1e-4);
  EXPECT_NEAR(p.recall, 0.8287, 1e-4);
  EXPECT_NEAR(p.f1, 0.8696, 1e-4);
  auto n = prf(cm, Label::Negative);
  EXPECT_NEAR(n.precision, 0.8510, 1e-4);
  EXPECT_NEAR(n.recall, 0.9267, 1e-4);
  EXPECT_NEAR(n.f1, 0.8872, 1e-4);
  EXPECT_NEAR(accuracy(cm), 0.8790, 1e-4);
  EXPECT_NEAR(macro_f1(cm), 0.5 * (p.f1 + n.f1), 1e-15);
}

TEST(Prf, DegenerateRatiosAreZeroAndFlagged) {
  ConfusionMatrix cm{0, 0, 5, 5, 0};
  auto p = prf(cm);
  EXPECT_EQ(p.precision, 0.0);
  EXPECT_EQ(p.f1, 0.0);
  EXPECT_TRUE(p.degenerate);
}

TEST(Prf, BoundedAndHarmonicMeanBetweenParts) {
  Rng rng(5);
  for (int t = 0; t < 2000; ++t) {
    ConfusionMatrix cm{rng.below(50), rng.below(50), rng.below(50), rng.below(50), 0};
    for (auto ref : {Label::Positive, Label::Negative}) {
      auto p = prf(cm, ref);
      for (double v : {p.precision, p.recall, p.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      if (p.precision > 0.0 && p.recall > 0.0) {
        EXPECT_LE(p.f1, std::max(p.precision, p.recall) + 1e-15);
        EXPECT_GE(p.f1, std::min(p.precision, p.recall) - 1e-15);
      }
    }
  }
}

TEST(MetricsJson, HasBothClasses) {
  auto j = to_json(ConfusionMatrix{150, 14, 31, 177, 0});
  EXPECT_NEAR(j["accuracy"].get<double>(), 0.8790, 1e-4);
  EXPECT_TRUE(j.contains("macro_f1"));
  EXPECT_FALSE(render_metrics(ConfusionMatrix{150, 14, 31, 177, 0}).empty());
}

TEST(SentimentTable, Table6Percentages) {
  auto t = sentiment_table({{"ANC", {195342, 51407}},
                            {"EFF", {87430, 33825}},
                            {"ActionSA", {60990, 28756}},
                            {"DA", {58154, 21545}}});
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.rows[0].party, "ANC");
  EXPECT_EQ(t.rows[0].positive_pct, 26);
  EXPECT_EQ(t.rows[0].negative_pct, 74);
  EXPECT_EQ(t.all.total, 401916u);
  EXPECT_EQ(t.all.positive, 135533u);
  EXPECT_EQ(t.all.positive_pct, 34);
  EXPECT_EQ(t.all.negative_pct, 66);
  for (const auto& r : t.rows) EXPECT_EQ(r.positive + r.negative, r.total);
  EXPECT_NE(render_table(t).find("ANC"), std::string::npos);
}

TEST(AggregateSentiment, CountsEveryDocument) {
  DocumentSet s;
  s.documents.push_back({"1", "t", Party::DA, Label::Positive, Provenance::Machine, ""});
  auto t = aggregate_sentiment(s);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].positive_pct, 100);
  EXPECT_EQ(t.rows[0].negative_pct, 0);

  Rng rng(2);
  DocumentSet big;
  const Party parties[] = {Party::ANC, Party::DA, Party::EFF, Party::ActionSA};
  for (int i = 0; i < 777; ++i) {
    big.documents.push_back({std::to_string(i), "t", parties[rng.below(4)],
                             rng.uniform() < 0.4 ? Label::Positive : Label::Negative, Provenance::Machine, ""});
  }
  auto tb = aggregate_sentiment(big);
  std::size_t sum = 0;
  for (const auto& r : tb.rows) sum += r.total;
  EXPECT_EQ(sum, 777u);
  EXPECT_EQ(tb.all.total, 777u);

  s.documents.push_back({"2", "t", {}, Label::Positive, Provenance::Machine, ""});
  EXPECT_THROW(aggregate_sentiment(s), DataError);
}
