#include <gtest/gtest.h>

#include <cmath>

#include "polsent/embed.hpp"
#include "support.hpp"

using namespace polsent;

namespace {

// Two disjoint 10-word lexicons; each document draws from one.
std::vector<ProcessedDoc> two_topic_corpus(std::uint64_t seed, std::size_t n = 400) {
  Rng rng(seed);
  std::vector<ProcessedDoc> out;
  for (std::size_t d = 0; d < n; ++d) {
    ProcessedDoc p{"d" + std::to_string(d), {}, {}, {}};
    const char prefix = d % 2 ? 'a' : 'b';
    for (int t = 0; t < 12; ++t) p.tokens.push_back(std::string(1, prefix) + std::to_string(rng.below(10)));
    out.push_back(p);
  }
  return out;
}

EmbedConfig small_config(EmbedMode mode) {
  EmbedConfig c;
  c.dim = 16;
  c.window = 3;
  c.epochs = 3;
  c.min_count = 1;
  c.mode = mode;
  c.seed = 4;
  return c;
}

}  // namespace

TEST(SkipGramLoss, ZeroStateLoss) {
  auto m = support::random_model(1, 8, 10, 0.0);
  const std::vector<std::size_t> neg{2, 3, 4};
  EXPECT_NEAR(sgns_loss_grad<double>(0, 1, neg, m).loss, 4.0 * std::log(2.0), 1e-12);
}

TEST(SkipGramLoss, HandExample) {
  auto m = support::random_model(1, 3, 2, 0.0);
  m.in_row(0)[0] = 1.0;
  m.out_row(1)[0] = 1.0;
  m.out_row(2)[0] = -1.0;
  const std::vector<std::size_t> neg{2};
  const double want = -2.0 * std::log(1.0 / (1.0 + std::exp(-1.0)));
  EXPECT_NEAR(sgns_loss_grad<double>(0, 1, neg, m).loss, want, 1e-12);
  EXPECT_NEAR(want, 0.6265, 1e-4);
}

TEST(SkipGramLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 25; ++s) {
    auto m = support::random_model(s);
    const std::vector<std::size_t> neg{3, 4, 5};
    EXPECT_LT(support::gradient_error(m, [&](const auto& mm) { return sgns_loss_grad<double>(0, 1, neg, mm); }),
              1e-4);
  }
}

TEST(SkipGramLoss, TouchesOnlyNamedRows) {
  auto m = support::random_model(2);
  const std::vector<std::size_t> neg{3, 5};
  auto g = sgns_loss_grad<double>(0, 1, neg, m);
  ASSERT_EQ(g.input.size(), 1u);
  EXPECT_EQ(g.input[0].row, 0u);
  std::set<std::size_t> out;
  for (const auto& r : g.output) out.insert(r.row);
  EXPECT_EQ(out, (std::set<std::size_t>{1, 3, 5}));
  EXPECT_GE(g.loss, 0.0);
}

TEST(SkipGramLoss, RejectsNegativeEqualToContext) {
  auto m = support::random_model(2);
  const std::vector<std::size_t> neg{1};
  EXPECT_THROW(sgns_loss_grad<double>(0, 1, neg, m), UsageError);
  EXPECT_THROW(sgns_loss_grad<double>(0, 99, {}, m), UsageError);
}

TEST(CbowLoss, ZeroStateLoss) {
  auto m = support::random_model(1, 8, 10, 0.0);
  const std::vector<std::size_t> ctx{0, 2}, neg{3, 4, 5, 6, 7};
  EXPECT_NEAR(cbow_loss_grad<double>(ctx, 1, neg, m).loss, 6.0 * std::log(2.0), 1e-12);
}

TEST(CbowLoss, SingleContextEqualsSkipGram) {
  auto m = support::random_model(5);
  const std::vector<std::size_t> ctx{2}, neg{4, 6};
  EXPECT_DOUBLE_EQ(cbow_loss_grad<double>(ctx, 3, neg, m).loss, sgns_loss_grad<double>(2, 3, neg, m).loss);
}

TEST(CbowLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 25; ++s) {
    auto m = support::random_model(100 + s);
    const std::vector<std::size_t> ctx{0, 2, 6}, neg{3, 4};
    EXPECT_LT(support::gradient_error(m, [&](const auto& mm) { return cbow_loss_grad<double>(ctx, 1, neg, mm); }),
              1e-4);
  }
}

TEST(CbowLoss, EmptyContextIsSkipped) {
  auto m = support::random_model(5);
  auto g = cbow_loss_grad<double>({}, 3, {}, m);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_TRUE(g.input.empty());
  EXPECT_TRUE(g.output.empty());
}

TEST(NoiseSampler, FollowsUnigramToThreeQuarters) {
  const std::vector<std::size_t> counts{100, 50, 10, 1, 300};
  NoiseSampler ns(counts);
  double z = 0.0;
  for (auto c : counts) z += std::pow(static_cast<double>(c), 0.75);
  Rng rng(8);
  std::vector<std::size_t> hits(counts.size(), 0);
  const std::size_t draws = 1000000;
  for (std::size_t i = 0; i < draws; ++i) ++hits[ns(rng)];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double want = std::pow(static_cast<double>(counts[i]), 0.75) / z;
    EXPECT_NEAR(ns.probability(i), want, 1e-12);
    EXPECT_NEAR(static_cast<double>(hits[i]) / draws, want, 0.02 * want + 1e-4);
  }
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  auto c = two_topic_corpus(1, 20);
  auto cfg = small_config(EmbedMode::SkipGram);
  cfg.epochs = 0;
  auto m = train<float>(c, cfg);
  for (float x : m.output) EXPECT_EQ(x, 0.0f);
  for (float x : m.input) EXPECT_LE(std::abs(x), 0.5f / static_cast<float>(cfg.dim));
  cfg.epochs = 0;
  auto again = train<float>(c, cfg);
  EXPECT_EQ(m.input, again.input);
}

TEST(Train, DeterministicSingleThread) {
  auto c = two_topic_corpus(2, 100);
  for (auto mode : {EmbedMode::SkipGram, EmbedMode::CBOW}) {
    auto a = train<float>(c, small_config(mode));
    auto b = train<float>(c, small_config(mode));
    EXPECT_EQ(a.input, b.input);
    EXPECT_EQ(a.output, b.output);
  }
}

TEST(Train, SeparatesDisjointLexicons) {
  auto c = two_topic_corpus(3);
  for (auto mode : {EmbedMode::SkipGram, EmbedMode::CBOW}) {
    auto cfg = small_config(mode);
    cfg.epochs = 5;
    auto m = train<float>(c, cfg);
    double intra = 0.0, cross = 0.0;
    std::size_t ni = 0, nc = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        const double cs = cosine<float>(m.in_row(i), m.in_row(j));
        if (m.vocab.term(i)[0] == m.vocab.term(j)[0]) {
          intra += cs;
          ++ni;
        } else {
          cross += cs;
          ++nc;
        }
      }
    }
    EXPECT_GT(intra / ni, cross / nc) << to_string(mode);
  }
}

TEST(Train, RejectsEmptyVocabularyAndBadConfig) {
  auto c = two_topic_corpus(1, 4);
  auto cfg = small_config(EmbedMode::CBOW);
  cfg.min_count = 1000;
  EXPECT_THROW(train<float>(c, cfg), DataError);
  cfg = small_config(EmbedMode::CBOW);
  cfg.lr_end = cfg.lr_start;
  EXPECT_THROW(train<float>(c, cfg), UsageError);
  cfg = small_config(EmbedMode::CBOW);
  cfg.negatives = 0;
  EXPECT_THROW(train<float>(c, cfg), UsageError);
}

TEST(Nearest, MatchesBruteForceAndExcludesQuery) {
  auto m = support::random_model(11, 4, 3, 1.0);
  for (std::size_t q = 0; q < 4; ++q) {
    auto nn = nearest(m, m.vocab.term(q), 10);
    ASSERT_EQ(nn.size(), 3u);
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j != q) brute.emplace_back(-cosine<double>(m.in_row(q), m.in_row(j)), j);
    }
    std::sort(brute.begin(), brute.end());
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_EQ(nn[r].word, m.vocab.term(brute[r].second));
      EXPECT_NE(nn[r].word, m.vocab.term(q));
    }
  }
  EXPECT_THROW(nearest(m, "missing", 2), DataError);
  EXPECT_THROW(nearest(m, m.vocab.term(0), 0), UsageError);
}

TEST(Nearest, OrthogonalVectorsScoreZero) {
  auto m = support::random_model(1, 2, 2, 0.0);
  m.in_row(0)[0] = 1.0;
  m.in_row(1)[1] = 1.0;
  EXPECT_EQ(nearest(m, m.vocab.term(0), 1)[0].cosine, 0.0);
}

TEST(DocVector, MeanOfWordVectors) {
  auto m = support::random_model(1, 3, 3, 0.0);
  m.in_row(0)[0] = 1.0;
  m.in_row(0)[1] = 2.0;
  m.in_row(1)[2] = 4.0;
  ProcessedDoc one{"a", {m.vocab.term(0)}, {}, {}};
  EXPECT_EQ(doc_vector(one, m).values, (std::vector<double>{1.0, 2.0, 0.0}));
  ProcessedDoc two{"b", {m.vocab.term(0), m.vocab.term(1), "oov"}, {}, {}};
  EXPECT_EQ(doc_vector(two, m).values, (std::vector<double>{0.5, 1.0, 2.0}));
  ProcessedDoc none{"c", {"oov"}, {}, {}};
  auto z = doc_vector(none, m);
  EXPECT_TRUE(z.empty);
  EXPECT_EQ(z.values, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(ModelFile, BinaryRoundTripAndTextExport) {
  auto c = two_topic_corpus(5, 30);
  auto m = train<float>(c, small_config(EmbedMode::CBOW));
  auto back = parse_model<float>(serialize_model(m));
  EXPECT_EQ(back.input, m.input);
  EXPECT_EQ(back.output, m.output);
  EXPECT_EQ(back.vocab, m.vocab);
  EXPECT_EQ(back.config.mode, EmbedMode::CBOW);
  auto text = export_text(m);
  EXPECT_EQ(text.substr(0, text.find('\n')), std::to_string(m.size()) + " 16");
  auto bytes = serialize_model(m);
  bytes[0] = 'X';
  EXPECT_THROW(parse_model<float>(bytes), DataError);
  EXPECT_THROW(parse_model<float>(serialize_model(m).substr(0, 40)), DataError);
}
