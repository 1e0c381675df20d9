#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

class Vocabulary {
 public:
  Vocabulary() = default;

  // Terms must be sorted and unique; df and cf aligned with terms.
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df,
             std::vector<std::size_t> cf, std::size_t n_docs)
      : terms_(std::move(terms)), df_(std::move(df)), cf_(std::move(cf)), n_docs_(n_docs) {
    if (df_.size() != terms_.size() || cf_.size() != terms_.size()) {
      throw DataError("vocabulary columns differ in length");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!index_.emplace(terms_[i], i).second) throw DataError("duplicate term " + terms_[i]);
      if (df_[i] < 1 || df_[i] > n_docs_) {
        throw DataError("df out of range for term " + terms_[i]);
      }
    }
  }

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::size_t n_docs() const { return n_docs_; }
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t df(std::size_t i) const { return df_.at(i); }
  // Total occurrences across the corpus.
  std::size_t cf(std::size_t i) const { return cf_.at(i); }
  const std::vector<std::size_t>& cfs() const { return cf_; }

  std::optional<std::size_t> find(const std::string& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& t) const { return index_.contains(t); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.terms_ == b.terms_ && a.df_ == b.df_ && a.cf_ == b.cf_ && a.n_docs_ == b.n_docs_;
  }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> df_;
  std::vector<std::size_t> cf_;
  std::size_t n_docs_ = 0;
};

namespace detail {

inline Vocabulary count_vocab(std::span<const ProcessedDoc> corpus, std::size_t min_df,
                              std::size_t min_cf) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& d : corpus) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : d.tokens) {
      auto& c = counts[t];
      ++c.second;
      if (seen.insert(t).second) ++c.first;
    }
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> df, cf;
  for (auto& [t, c] : counts) {
    if (c.first >= min_df && c.second >= min_cf) {
      terms.push_back(t);
      df.push_back(c.first);
      cf.push_back(c.second);
    }
  }
  return Vocabulary(std::move(terms), std::move(df), std::move(cf), corpus.size());
}

}  // namespace detail

// Terms appearing in at least min_df documents, in lexicographic order.
inline Vocabulary build_vocab(std::span<const ProcessedDoc> corpus, std::size_t min_df = 2) {
  if (min_df < 1) throw UsageError("min_df must be >= 1");
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  return detail::count_vocab(corpus, min_df, 1);
}

// Terms with at least min_count occurrences, for embedding training.
inline Vocabulary build_vocab_by_count(std::span<const ProcessedDoc> corpus,
                                       std::size_t min_count) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  return detail::count_vocab(corpus, 1, std::max<std::size_t>(min_count, 1));
}

struct SparseVector {
  std::vector<std::size_t> idx;  // strictly increasing
  std::vector<double> val;

  std::size_t nnz() const { return idx.size(); }

  double dot(std::span<const double> dense) const {
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * dense[idx[k]];
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : val) s += v * v;
    return s;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

inline double squared_distance(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.idx.size() || j < b.idx.size()) {
    if (j >= b.idx.size() || (i < a.idx.size() && a.idx[i] < b.idx[j])) {
      s += a.val[i] * a.val[i];
      ++i;
    } else if (i >= a.idx.size() || b.idx[j] < a.idx[i]) {
      s += b.val[j] * b.val[j];
      ++j;
    } else {
      const double d = a.val[i] - b.val[j];
      s += d * d;
      ++i;
      ++j;
    }
  }
  return s;
}

struct DocMatrix {
  std::vector<std::string> ids;
  std::vector<SparseVector> rows;
  std::size_t cols = 0;

  std::size_t size() const { return rows.size(); }
};

// TF(t,d) * ln(n / df(t)) with TF the raw count. Unknown terms score 0 and
// bump *oov when given.
inline double tfidf_weight(const std::string& term, const ProcessedDoc& doc,
                           const Vocabulary& vocab, std::size_t* oov = nullptr) {
  auto i = vocab.find(term);
  if (!i) {
    if (oov) ++*oov;
    return 0.0;
  }
  const auto tf = static_cast<double>(std::count(doc.tokens.begin(), doc.tokens.end(), term));
  if (tf == 0.0) return 0.0;
  return tf * std::log(static_cast<double>(vocab.n_docs()) / static_cast<double>(vocab.df(*i)));
}

inline SparseVector tfidf_row(const ProcessedDoc& doc, const Vocabulary& vocab, bool normalize) {
  std::map<std::size_t, double> tf;
  for (const auto& t : doc.tokens) {
    if (auto i = vocab.find(t)) tf[*i] += 1.0;
  }
  SparseVector row;
  for (auto [i, c] : tf) {
    const double w =
        c * std::log(static_cast<double>(vocab.n_docs()) / static_cast<double>(vocab.df(i)));
    if (w != 0.0) {
      row.idx.push_back(i);
      row.val.push_back(w);
    }
  }
  if (normalize) {
    const double norm = std::sqrt(row.squared_norm());
    if (norm > 0.0) {
      for (double& v : row.val) v /= norm;
    }
  }
  return row;
}

inline DocMatrix tfidf_matrix(std::span<const ProcessedDoc> corpus, const Vocabulary& vocab,
                              bool normalize = true, unsigned threads = 1) {
  DocMatrix m;
  m.cols = vocab.size();
  m.ids.reserve(corpus.size());
  for (const auto& d : corpus) m.ids.push_back(d.id);
  m.rows.resize(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) m.rows[i] = tfidf_row(corpus[i], vocab, normalize);
  });
  return m;
}

inline std::string vocab_csv(const Vocabulary& v) {
  std::string out = "# n_docs " + std::to_string(v.n_docs()) + "\nterm,df\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += v.term(i) + ',' + std::to_string(v.df(i)) + '\n';
  }
  return out;
}

// Inverse of vocab_csv. Collection frequencies are not stored, so cf = df.
inline Vocabulary parse_vocab_csv(std::string_view data) {
  std::istringstream in{std::string(data)};
  std::string line;
  std::size_t n_docs = 0;
  bool have_n = false;
  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.starts_with("# n_docs ")) {
      n_docs = static_cast<std::size_t>(parse_int(trim(t.substr(9))));
      have_n = true;
      continue;
    }
    if (t == "term,df") continue;
    const auto comma = t.rfind(',');
    if (comma == std::string_view::npos) throw DataError("bad vocabulary line: " + line);
    terms.emplace_back(t.substr(0, comma));
    df.push_back(static_cast<std::size_t>(parse_int(t.substr(comma + 1))));
  }
  if (!have_n) throw DataError("vocabulary file lacks '# n_docs' header");
  auto cf = df;
  return Vocabulary(std::move(terms), std::move(df), std::move(cf), n_docs);
}

// Sparse triplets doc_id,term_index,weight in row order.
inline std::string triplets_csv(const DocMatrix& m) {
  std::string out = "doc_id,term_index,weight\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    const auto& row = m.rows[r];
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      out += m.ids[r] + ',' + std::to_string(row.idx[k]) + ',' + format_double(row.val[k]) + '\n';
    }
  }
  return out;
}

}  // namespace polsent
