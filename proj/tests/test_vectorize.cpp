#include <gtest/gtest.h>

#include <cmath>

#include "polsent/vectorize.hpp"
#include "support.hpp"

using namespace polsent;

namespace {

std::vector<ProcessedDoc> docs(std::initializer_list<std::vector<std::string>> toks) {
  std::vector<ProcessedDoc> out;
  for (const auto& t : toks) out.push_back({"d" + std::to_string(out.size()), t, {}, {}});
  return out;
}

double weight(const SparseVector& r, std::size_t col) {
  for (std::size_t k = 0; k < r.nnz(); ++k) {
    if (r.idx[k] == col) return r.val[k];
  }
  return 0.0;
}

}  // namespace

TEST(Vocab, CountsDocumentFrequency) {
  auto c = docs({{"a", "b"}, {"b"}});
  auto v = build_vocab(c, 1);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.n_docs(), 2u);
  EXPECT_EQ(v.df(*v.find("a")), 1u);
  EXPECT_EQ(v.df(*v.find("b")), 2u);
  auto v2 = build_vocab(c, 2);
  ASSERT_EQ(v2.size(), 1u);
  EXPECT_EQ(v2.term(0), "b");
}

TEST(Vocab, RepeatsCountOncePerDocument) {
  auto v = build_vocab(docs({{"b", "b"}}), 1);
  EXPECT_EQ(v.df(0), 1u);
  EXPECT_EQ(v.cf(0), 2u);
}

TEST(Vocab, LexicographicAndValidated) {
  auto v = build_vocab(docs({{"zeta", "alpha", "mid"}}), 1);
  EXPECT_EQ(v.term(0), "alpha");
  EXPECT_EQ(v.term(2), "zeta");
  EXPECT_THROW(build_vocab(std::vector<ProcessedDoc>{}, 1), DataError);
  EXPECT_THROW(build_vocab(docs({{"a"}}), 0), UsageError);
}

TEST(Vocab, CsvRoundTrip) {
  auto v = build_vocab(docs({{"a", "b"}, {"b", "c"}, {"c"}}), 1);
  auto back = parse_vocab_csv(vocab_csv(v));
  EXPECT_EQ(back.n_docs(), v.n_docs());
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back.term(i), v.term(i));
    EXPECT_EQ(back.df(i), v.df(i));
  }
  EXPECT_THROW(parse_vocab_csv("term,df\nx,1\n"), DataError);
}

TEST(TfIdf, WeightFormula) {
  auto c = docs({{"rare", "rare", "rare"}, {"x"}, {"y"}, {"z"}});
  auto v = build_vocab(c, 1);
  EXPECT_NEAR(tfidf_weight("rare", c[0], v), 3.0 * std::log(4.0), 1e-12);
  EXPECT_NEAR(tfidf_weight("rare", c[0], v), 4.1589, 1e-4);
  EXPECT_EQ(tfidf_weight("rare", c[1], v), 0.0);
  std::size_t oov = 0;
  EXPECT_EQ(tfidf_weight("unknown", c[0], v, &oov), 0.0);
  EXPECT_EQ(oov, 1u);
}

TEST(TfIdf, TermInEveryDocumentWeighsZero) {
  auto c = docs({{"vote", "anc"}, {"vote"}, {"vote", "da"}});
  auto v = build_vocab(c, 1);
  for (const auto& d : c) EXPECT_EQ(tfidf_weight("vote", d, v), 0.0);
}

TEST(TfIdf, FixtureMatchesHandComputation) {
  auto c = parse_processed_jsonl(read_file(support::fixture("tfidf5.jsonl")));
  auto v = build_vocab(c, 1);
  auto raw = tfidf_matrix(c, v, false);
  auto lines = read_lines(support::fixture("tfidf5_expected.csv"));
  ASSERT_EQ(lines.size(), 18u);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string id, term, w, wn;
    std::getline(ss, id, ',');
    std::getline(ss, term, ',');
    std::getline(ss, w, ',');
    std::getline(ss, wn, ',');
    const auto row = static_cast<std::size_t>(std::find(raw.ids.begin(), raw.ids.end(), id) - raw.ids.begin());
    EXPECT_NEAR(weight(raw.rows[row], *v.find(term)), parse_double(w), 1e-12) << id << " " << term;
  }
}

TEST(TfIdf, NormalizedRowsHaveUnitLength) {
  auto c = parse_processed_jsonl(read_file(support::fixture("tfidf5.jsonl")));
  auto m = tfidf_matrix(c, build_vocab(c, 1), true);
  for (const auto& r : m.rows) EXPECT_NEAR(std::sqrt(r.squared_norm()), 1.0, 1e-12);
}

TEST(TfIdf, IdenticalDocumentsGiveZeroMatrix) {
  std::vector<ProcessedDoc> c(5, {"", {"same", "words", "same"}, {}, {}});
  auto m = tfidf_matrix(c, build_vocab(c, 1), true);
  for (const auto& r : m.rows) EXPECT_EQ(r.nnz(), 0u);
}

TEST(TfIdf, InvariantToDocumentOrderAndThreads) {
  auto c = parse_processed_jsonl(read_file(support::fixture("tfidf5.jsonl")));
  auto v = build_vocab(c, 1);
  auto m = tfidf_matrix(c, v, true, 1);
  auto rev = c;
  std::reverse(rev.begin(), rev.end());
  auto mr = tfidf_matrix(rev, v, true, 3);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(m.rows[i], mr.rows[c.size() - 1 - i]);
}

TEST(TfIdf, WeightsNonNegativeAndZeroOnlyWhenForced) {
  Rng rng(3);
  std::vector<ProcessedDoc> c;
  for (int d = 0; d < 40; ++d) {
    ProcessedDoc p{"d" + std::to_string(d), {}, {}, {}};
    for (int t = 0; t < 8; ++t) p.tokens.push_back("w" + std::to_string(rng.below(15)));
    c.push_back(p);
  }
  auto v = build_vocab(c, 1);
  for (const auto& d : c) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double w = tfidf_weight(v.term(i), d, v);
      const bool present = std::count(d.tokens.begin(), d.tokens.end(), v.term(i)) > 0;
      EXPECT_GE(w, 0.0);
      EXPECT_EQ(w == 0.0, !present || v.df(i) == v.n_docs());
    }
  }
}

TEST(TfIdf, TripletCsvLayout) {
  auto c = docs({{"a", "b"}, {"b", "c"}});
  auto m = tfidf_matrix(c, build_vocab(c, 1), false);
  auto csv = triplets_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "doc_id,term_index,weight");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Sparse, SquaredDistanceMatchesDense) {
  SparseVector a{{0, 3}, {1.0, 2.0}}, b{{1, 3}, {4.0, -1.0}};
  EXPECT_DOUBLE_EQ(squared_distance(a, b), 1.0 + 16.0 + 9.0);
  EXPECT_DOUBLE_EQ(squared_distance(a, a), 0.0);
}
