#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/textprep.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"
#include "polsent/vectorize.hpp"

namespace polsent {

struct LdaParams {
  std::size_t K = 5;
  double alpha = 10.0;  // 50 / K
  double beta = 0.01;
  std::size_t iters = 1000;
  std::uint64_t seed = 1;

  static LdaParams with_topics(std::size_t K) {
    LdaParams p;
    p.K = K;
    p.alpha = 50.0 / static_cast<double>(K);
    return p;
  }
};

// Collapsed Gibbs state. Count tables are row-major: n_dk is D x K and
// n_kw is K x V.
struct TopicModel {
  std::size_t K = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Vocabulary vocab;
  std::vector<std::vector<std::size_t>> docs;  // word ids
  std::vector<std::vector<std::size_t>> z;     // topic per token
  std::vector<std::size_t> n_dk;
  std::vector<std::size_t> n_kw;
  std::vector<std::size_t> n_k;
  Rng rng;
  std::size_t sweeps = 0;

  std::size_t V() const { return vocab.size(); }
  std::size_t D() const { return docs.size(); }
  std::size_t& dk(std::size_t d, std::size_t k) { return n_dk[d * K + k]; }
  std::size_t dk(std::size_t d, std::size_t k) const { return n_dk[d * K + k]; }
  std::size_t& kw(std::size_t k, std::size_t w) { return n_kw[k * V() + w]; }
  std::size_t kw(std::size_t k, std::size_t w) const { return n_kw[k * V() + w]; }

  // Recounts from z and compares with the stored tables.
  bool counts_consistent() const {
    std::vector<std::size_t> dk2(n_dk.size(), 0), kw2(n_kw.size(), 0), k2(K, 0);
    for (std::size_t d = 0; d < D(); ++d) {
      if (z[d].size() != docs[d].size()) return false;
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        ++dk2[d * K + z[d][i]];
        ++kw2[z[d][i] * V() + docs[d][i]];
        ++k2[z[d][i]];
      }
    }
    return dk2 == n_dk && kw2 == n_kw && k2 == n_k;
  }
};

namespace detail {

inline void conditional_into(const TopicModel& m, std::size_t d, std::size_t w,
                             std::vector<double>& p) {
  p.resize(m.K);
  const double vb = static_cast<double>(m.V()) * m.beta;
  for (std::size_t k = 0; k < m.K; ++k) {
    p[k] = (static_cast<double>(m.dk(d, k)) + m.alpha) *
           (static_cast<double>(m.kw(k, w)) + m.beta) / (static_cast<double>(m.n_k[k]) + vb);
  }
}

}  // namespace detail

// P(z_i = k | rest) for token i of document d, normalized.
inline std::vector<double> conditional(TopicModel& m, std::size_t d, std::size_t i) {
  const auto w = m.docs.at(d).at(i);
  const auto old = m.z[d][i];
  --m.dk(d, old);
  --m.kw(old, w);
  --m.n_k[old];
  std::vector<double> p;
  detail::conditional_into(m, d, w, p);
  ++m.dk(d, old);
  ++m.kw(old, w);
  ++m.n_k[old];
  double s = 0.0;
  for (double x : p) s += x;
  for (double& x : p) x /= s;
  return p;
}

// Resamples every token once, in document order.
inline TopicModel& gibbs_sweep(TopicModel& m) {
  std::vector<double> p(m.K);
  for (std::size_t d = 0; d < m.D(); ++d) {
    for (std::size_t i = 0; i < m.docs[d].size(); ++i) {
      const auto w = m.docs[d][i];
      const auto old = m.z[d][i];
      --m.dk(d, old);
      --m.kw(old, w);
      --m.n_k[old];
      detail::conditional_into(m, d, w, p);
      for (std::size_t k = 1; k < m.K; ++k) p[k] += p[k - 1];
      const double u = m.rng.uniform() * p[m.K - 1];
      std::size_t k = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), u) - p.begin());
      if (k >= m.K) k = m.K - 1;
      m.z[d][i] = k;
      ++m.dk(d, k);
      ++m.kw(k, w);
      ++m.n_k[k];
    }
  }
  ++m.sweeps;
  return m;
}

// Random topic assignment with no sweeps.
inline TopicModel init_lda(std::span<const ProcessedDoc> corpus, const LdaParams& p) {
  if (p.K < 2) throw UsageError("LDA needs K >= 2");
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) throw UsageError("alpha and beta must be positive");
  if (corpus.empty()) throw DataError("LDA corpus is empty");
  TopicModel m;
  m.K = p.K;
  m.alpha = p.alpha;
  m.beta = p.beta;
  m.vocab = build_vocab(corpus, 1);
  if (m.vocab.empty()) throw DataError("LDA vocabulary is empty");
  m.rng = Rng(mix_seed(p.seed, 0x1da));
  m.n_dk.assign(corpus.size() * m.K, 0);
  m.n_kw.assign(m.K * m.V(), 0);
  m.n_k.assign(m.K, 0);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    std::vector<std::size_t> ids, zs;
    for (const auto& t : corpus[d].tokens) {
      const auto w = *m.vocab.find(t);
      const auto k = static_cast<std::size_t>(m.rng.below(m.K));
      ids.push_back(w);
      zs.push_back(k);
      ++m.dk(d, k);
      ++m.kw(k, w);
      ++m.n_k[k];
    }
    m.docs.push_back(std::move(ids));
    m.z.push_back(std::move(zs));
  }
  return m;
}

inline TopicModel fit_lda(std::span<const ProcessedDoc> corpus, const LdaParams& p) {
  if (p.iters < 1) throw UsageError("LDA needs iters >= 1");
  auto m = init_lda(corpus, p);
  for (std::size_t it = 0; it < p.iters; ++it) gibbs_sweep(m);
  return m;
}

// phi_kw = (n_kw + beta) / (n_k + V beta)
inline std::vector<double> phi(const TopicModel& m, std::size_t k) {
  std::vector<double> row(m.V());
  const double den = static_cast<double>(m.n_k[k]) + static_cast<double>(m.V()) * m.beta;
  for (std::size_t w = 0; w < m.V(); ++w) row[w] = (static_cast<double>(m.kw(k, w)) + m.beta) / den;
  return row;
}

// theta_dk = (n_dk + alpha) / (len_d + K alpha)
inline std::vector<double> theta(const TopicModel& m, std::size_t d) {
  std::vector<double> row(m.K);
  const double den = static_cast<double>(m.docs[d].size()) + static_cast<double>(m.K) * m.alpha;
  for (std::size_t k = 0; k < m.K; ++k) row[k] = (static_cast<double>(m.dk(d, k)) + m.alpha) / den;
  return row;
}

struct WeightedWord {
  std::string word;
  double weight;
};

// Top-k words per topic by phi; ties go to the lower vocabulary index.
inline std::vector<std::vector<WeightedWord>> top_words(const TopicModel& m, std::size_t k) {
  if (k < 1) throw UsageError("k must be >= 1");
  std::vector<std::vector<WeightedWord>> out;
  for (std::size_t t = 0; t < m.K; ++t) {
    auto row = phi(m, t);
    std::vector<std::size_t> idx(m.V());
    for (std::size_t w = 0; w < m.V(); ++w) idx[w] = w;
    const std::size_t take = std::min(k, m.V());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        return row[a] != row[b] ? row[a] > row[b] : a < b;
                      });
    std::vector<WeightedWord> words;
    for (std::size_t i = 0; i < take; ++i) words.push_back({m.vocab.term(idx[i]), row[idx[i]]});
    out.push_back(std::move(words));
  }
  return out;
}

struct NgramTable {
  std::size_t n = 4;
  std::vector<std::pair<std::string, std::size_t>> entries;  // space-joined gram, count

  std::string csv() const {
    std::string out = "rank,ngram,count\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out += std::to_string(i + 1) + ',' + entries[i].first + ',' + std::to_string(entries[i].second) + '\n';
    }
    return out;
  }
};

// Counts contiguous n-token windows inside each document. top = 0 keeps all.
inline NgramTable ngrams(std::span<const ProcessedDoc> corpus, std::size_t n = 4,
                         std::size_t top = 0, unsigned threads = 1) {
  if (n < 1) throw UsageError("n must be >= 1");
  const unsigned t = std::max(1u, threads);
  std::vector<std::map<std::string, std::size_t>> parts(t);
  const std::size_t chunk = corpus.empty() ? 1 : (corpus.size() + t - 1) / t;
  parallel_for(corpus.size(), t, [&](std::size_t b, std::size_t e) {
    auto& counts = parts[b / chunk];
    for (std::size_t d = b; d < e; ++d) {
      const auto& toks = corpus[d].tokens;
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string g = toks[i];
        for (std::size_t j = 1; j < n; ++j) g += ' ' + toks[i + j];
        ++counts[g];
      }
    }
  });
  std::map<std::string, std::size_t> all;
  for (auto& p : parts) {
    for (auto& [g, c] : p) all[g] += c;
  }
  NgramTable table;
  table.n = n;
  table.entries.assign(all.begin(), all.end());
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top > 0 && table.entries.size() > top) table.entries.resize(top);
  return table;
}

struct PartyTopics {
  Party party;
  std::size_t documents = 0;
  std::vector<std::vector<WeightedWord>> topics;
  NgramTable grams;
};

// LDA and n-grams over the negative documents of each party.
inline std::vector<PartyTopics> analyze_negative(const DocumentSet& labeled, const PrepConfig& prep,
                                                 const LdaParams& lda, std::size_t top_k,
                                                 std::size_t n, std::size_t top_grams) {
  std::map<Party, std::vector<ProcessedDoc>> by_party;
  for (const auto& d : labeled.documents) {
    if (d.label == Label::Negative && d.party) by_party[*d.party].push_back(run_pipeline(d, prep));
  }
  std::vector<PartyTopics> out;
  for (auto& [p, docs] : by_party) {
    PartyTopics pt{p, docs.size(), {}, {}};
    std::erase_if(docs, [](const ProcessedDoc& d) { return d.tokens.empty(); });
    if (!docs.empty()) {
      LdaParams pl = lda;
      pl.seed = mix_seed(lda.seed, static_cast<std::uint64_t>(p));
      pt.topics = top_words(fit_lda(docs, pl), top_k);
    }
    pt.grams = ngrams(docs, n, top_grams);
    out.push_back(std::move(pt));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<PartyTopics>& parties) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& p : parties) {
    nlohmann::json topics = nlohmann::json::array();
    for (const auto& t : p.topics) {
      nlohmann::json words = nlohmann::json::array();
      for (const auto& w : t) words.push_back({{"word", w.word}, {"phi", w.weight}});
      topics.push_back(words);
    }
    nlohmann::json grams = nlohmann::json::array();
    for (const auto& [g, c] : p.grams.entries) grams.push_back({{"ngram", g}, {"count", c}});
    j[std::string(to_string(p.party))] = {{"documents", p.documents}, {"topics", topics}, {"ngrams", grams}};
  }
  return j;
}

// Horizontal bars of phi per topic, one panel per topic.
inline std::string topics_svg(const std::vector<std::vector<WeightedWord>>& topics,
                              const std::string& title = "") {
  const int bar_h = 16, panel_w = 320, label_w = 120, gap = 24;
  std::size_t rows = 0;
  for (const auto& t : topics) rows = std::max(rows, t.size());
  const int width = static_cast<int>(topics.size()) * (panel_w + gap) + gap;
  const int height = 40 + static_cast<int>(rows) * bar_h + gap;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                  "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (!title.empty()) s += "<text x=\"" + std::to_string(gap) + "\" y=\"16\">" + title + "</text>\n";
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const int x0 = gap + static_cast<int>(t) * (panel_w + gap);
    double mx = 0.0;
    for (const auto& w : topics[t]) mx = std::max(mx, w.weight);
    s += "<text x=\"" + std::to_string(x0) + "\" y=\"32\">topic " + std::to_string(t + 1) + "</text>\n";
    for (std::size_t i = 0; i < topics[t].size(); ++i) {
      const int y = 40 + static_cast<int>(i) * bar_h;
      const int w = mx > 0 ? static_cast<int>((panel_w - label_w) * topics[t][i].weight / mx) : 0;
      s += "<text x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(y + 12) + "\">" +
           topics[t][i].word + "</text>";
      s += "<rect x=\"" + std::to_string(x0 + label_w) + "\" y=\"" + std::to_string(y + 2) +
           "\" width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(bar_h - 4) +
           "\" fill=\"#4a6fa5\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace polsent
