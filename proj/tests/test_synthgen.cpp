#include <gtest/gtest.h>

#include <set>

#include "polsent/baseline.hpp"
#include "polsent/features.hpp"
#include "polsent/synthgen.hpp"
#include "support.hpp"

using namespace polsent;

TEST(Synth, ExactVisibleLabelCount) {
  auto spec = GenSpec::defaults(1);
  auto g = generate(spec);
  EXPECT_EQ(g.corpus.size(), 2000u);
  EXPECT_EQ(g.visible_count(), 100u);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < g.corpus.size(); ++i) {
    const auto& d = g.corpus.documents[i];
    EXPECT_EQ(d.label.has_value(), g.visible[i]);
    if (d.label) EXPECT_EQ(*d.label, g.truth[i]);
    labeled += d.label.has_value();
  }
  EXPECT_EQ(labeled, 100u);
}

TEST(Synth, SameSeedSameCorpus) {
  auto a = generate(GenSpec::defaults(5));
  auto b = generate(GenSpec::defaults(5));
  EXPECT_EQ(a.corpus.documents, b.corpus.documents);
  EXPECT_EQ(a.truth_csv(), b.truth_csv());
  EXPECT_NE(generate(GenSpec::defaults(6)).corpus.documents, a.corpus.documents);
}

TEST(Synth, ClassBalanceAndHoldout) {
  auto spec = GenSpec::defaults(2);
  spec.n_docs = 1000;
  spec.positive_fraction = 0.3;
  spec.holdout_docs = 50;
  auto g = generate(spec);
  EXPECT_EQ(std::count(g.truth.begin(), g.truth.end(), Label::Positive), 300);
  ASSERT_EQ(g.holdout.size(), 50u);
  std::set<std::string> ids;
  for (const auto& d : g.corpus.documents) ids.insert(d.id);
  for (const auto& d : g.holdout.documents) {
    EXPECT_TRUE(d.label.has_value());
    EXPECT_FALSE(ids.contains(d.id));
  }
}

TEST(Synth, LexiconWordsSurvivePreprocessing) {
  auto spec = GenSpec::defaults(3);
  const auto prep = PrepConfig::defaults();
  for (const auto* lex : {&spec.pos_lexicon, &spec.neg_lexicon, &spec.noise_lexicon}) {
    for (const auto& w : *lex) {
      Document d{"x", w, {}, {}, {}, ""};
      EXPECT_EQ(run_pipeline(d, prep).tokens, std::vector<std::string>{w});
    }
  }
}

TEST(Synth, FullRateIsSeparableByLexiconOracle) {
  auto spec = GenSpec::defaults(4);
  spec.sentiment_word_rate = 1.0;
  spec.n_docs = 500;
  auto g = generate(spec);
  std::set<std::string> pos(spec.pos_lexicon.begin(), spec.pos_lexicon.end());
  for (std::size_t i = 0; i < g.corpus.size(); ++i) {
    int score = 0;
    for (const auto& t : tokenize(g.corpus.documents[i].text)) score += pos.contains(t) ? 1 : -1;
    EXPECT_EQ(score > 0 ? Label::Positive : Label::Negative, g.truth[i]);
  }
}

TEST(Synth, FullRateIsSeparableBySvm) {
  auto spec = GenSpec::defaults(5);
  spec.sentiment_word_rate = 1.0;
  spec.n_docs = 400;
  auto g = generate(spec);
  auto processed = run_pipeline(g.corpus.documents, PrepConfig::defaults());
  Featurizer f(processed, FeatureConfig{.min_df = 1});
  auto rows = f.rows(processed);
  auto m = train_svm<SparseVector>(rows, g.truth, f.dim(), {.reg_lambda = 1e-3});
  EXPECT_EQ(predict<SparseVector>(m, rows), g.truth);
}

TEST(Synth, RejectsInvalidSpecs) {
  auto s = GenSpec::defaults(1);
  s.neg_lexicon.push_back(s.pos_lexicon[0]);
  EXPECT_THROW(generate(s), UsageError);
  s = GenSpec::defaults(1);
  s.sentiment_word_rate = 0.0;
  EXPECT_THROW(generate(s), UsageError);
  s = GenSpec::defaults(1);
  s.doc_length = {5, 2};
  EXPECT_THROW(generate(s), UsageError);
}

TEST(Synth, LexiconIsDistinctAndAvoidsList) {
  auto a = make_lexicon(200, 9);
  std::set<std::string> uniq(a.begin(), a.end());
  EXPECT_EQ(uniq.size(), 200u);
  auto b = make_lexicon(50, 9, uniq);
  for (const auto& w : b) EXPECT_FALSE(uniq.contains(w));
}
