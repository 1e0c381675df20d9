#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/corpus.hpp"
#include "polsent/textprep.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

// Distinct pseudo-words that preprocessing leaves untouched: lowercase
// letters, no stop words, no long letter runs, fixed under stemming.
inline std::vector<std::string> make_lexicon(std::size_t count, std::uint64_t seed,
                                             const std::set<std::string>& avoid = {}) {
  static constexpr std::string_view onset = "bdfgklmnprtvz";
  static constexpr std::string_view vowel = "aiou";
  static constexpr std::string_view coda = "kmnprt";
  const PrepConfig prep = PrepConfig::defaults();
  Rng rng(mix_seed(seed, 0x1e71));
  std::set<std::string> seen(avoid.begin(), avoid.end());
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 1000 + 10000) throw DataError("cannot generate enough pseudo-words");
    std::string w;
    const auto syllables = 2 + rng.below(2);
    for (std::uint64_t s = 0; s < syllables; ++s) {
      w += onset[rng.below(onset.size())];
      w += vowel[rng.below(vowel.size())];
    }
    w += coda[rng.below(coda.size())];
    if (seen.contains(w) || prep.stopwords.contains(w)) continue;
    if (normalize(w, prep) != w || stem_word(w) != w) continue;
    seen.insert(w);
    out.push_back(std::move(w));
  }
  return out;
}

struct GenSpec {
  std::size_t n_docs = 2000;
  std::vector<Party> parties = {kMainParties.begin(), kMainParties.end()};
  std::vector<std::string> pos_lexicon;
  std::vector<std::string> neg_lexicon;
  std::vector<std::string> noise_lexicon;
  double sentiment_word_rate = 0.6;
  std::pair<std::size_t, std::size_t> doc_length = {8, 20};
  double label_fraction = 0.05;
  double positive_fraction = 0.5;
  // Extra fully labeled documents generated beside the corpus.
  std::size_t holdout_docs = 0;
  std::uint64_t seed = 1;

  // Lexicons of 40 / 40 / 400 pseudo-words drawn from the seed.
  static GenSpec defaults(std::uint64_t seed = 1) {
    GenSpec s;
    s.seed = seed;
    auto all = make_lexicon(480, mix_seed(seed, 0x7e));
    s.pos_lexicon.assign(all.begin(), all.begin() + 40);
    s.neg_lexicon.assign(all.begin() + 40, all.begin() + 80);
    s.noise_lexicon.assign(all.begin() + 80, all.end());
    return s;
  }

  void validate() const {
    if (pos_lexicon.empty() || neg_lexicon.empty() || noise_lexicon.empty()) {
      throw UsageError("lexicons must be non-empty");
    }
    std::set<std::string> seen;
    for (const auto* lex : {&pos_lexicon, &neg_lexicon, &noise_lexicon}) {
      std::set<std::string> own(lex->begin(), lex->end());
      for (const auto& w : own) {
        if (!seen.insert(w).second) throw UsageError("lexicons overlap on '" + w + "'");
      }
    }
    if (!(sentiment_word_rate > 0.0 && sentiment_word_rate <= 1.0)) {
      throw UsageError("sentiment_word_rate must lie in (0, 1]");
    }
    if (!(label_fraction >= 0.0 && label_fraction <= 1.0)) {
      throw UsageError("label_fraction must lie in [0, 1]");
    }
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
      throw UsageError("positive_fraction must lie in [0, 1]");
    }
    if (doc_length.first < 1 || doc_length.first > doc_length.second) {
      throw UsageError("doc_length must satisfy 1 <= min <= max");
    }
    if (parties.empty()) throw UsageError("need at least one party");
  }
};

struct GenResult {
  DocumentSet corpus;          // visible labels only
  std::vector<Label> truth;    // aligned with corpus
  std::vector<bool> visible;   // aligned with corpus
  DocumentSet holdout;         // all labeled

  std::string truth_csv() const {
    std::string out = "id,label\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
      out += corpus.documents[i].id + ',' + std::string(to_string(truth[i])) + '\n';
    }
    return out;
  }

  std::size_t visible_count() const {
    return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), true));
  }
};

namespace detail {

inline std::string pad_id(char prefix, std::size_t i, std::size_t n) {
  auto s = std::to_string(i);
  const auto width = std::to_string(n).size();
  return std::string(1, prefix) + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

inline std::vector<Label> class_assignment(std::size_t n, double positive_fraction, Rng& rng) {
  const auto npos = static_cast<std::size_t>(std::llround(positive_fraction * static_cast<double>(n)));
  std::vector<Label> labels(n, Label::Negative);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(npos, n)), Label::Positive);
  rng.shuffle(labels);
  return labels;
}

inline Document make_doc(std::string id, Label cls, const GenSpec& spec, Rng& rng) {
  const auto len = spec.doc_length.first +
                   rng.below(spec.doc_length.second - spec.doc_length.first + 1);
  const auto& lex = cls == Label::Positive ? spec.pos_lexicon : spec.neg_lexicon;
  std::string text;
  for (std::uint64_t t = 0; t < len; ++t) {
    if (t) text += ' ';
    if (rng.uniform() < spec.sentiment_word_rate) {
      text += lex[rng.below(lex.size())];
    } else {
      text += spec.noise_lexicon[rng.below(spec.noise_lexicon.size())];
    }
  }
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.party = spec.parties[rng.below(spec.parties.size())];
  d.source = "synthetic";
  return d;
}

}  // namespace detail

// Exactly round(label_fraction * n_docs) visible labels, split across the
// classes by largest remainder.
inline GenResult generate(const GenSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x5e7));
  GenResult r;
  r.corpus.role = Role::Synthetic;
  r.truth = detail::class_assignment(spec.n_docs, spec.positive_fraction, rng);
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    r.corpus.documents.push_back(detail::make_doc(detail::pad_id('d', i, spec.n_docs), r.truth[i], spec, rng));
  }

  const auto want = static_cast<std::size_t>(std::llround(spec.label_fraction * static_cast<double>(spec.n_docs)));
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < spec.n_docs; ++i) (r.truth[i] == Label::Positive ? pos : neg).push_back(i);
  rng.shuffle(pos);
  rng.shuffle(neg);
  const double exact_pos = spec.n_docs ? static_cast<double>(want) * static_cast<double>(pos.size()) /
                                             static_cast<double>(spec.n_docs)
                                       : 0.0;
  std::size_t take_pos = static_cast<std::size_t>(exact_pos);
  std::size_t take_neg = static_cast<std::size_t>(static_cast<double>(want) - exact_pos);
  if (take_pos + take_neg < want) {
    const double rem_pos = exact_pos - static_cast<double>(take_pos);
    const double rem_neg = (static_cast<double>(want) - exact_pos) - static_cast<double>(take_neg);
    (rem_pos >= rem_neg ? take_pos : take_neg) += want - take_pos - take_neg;
  }
  take_pos = std::min(take_pos, pos.size());
  take_neg = std::min(want - take_pos, neg.size());
  r.visible.assign(spec.n_docs, false);
  for (std::size_t k = 0; k < take_pos; ++k) r.visible[pos[k]] = true;
  for (std::size_t k = 0; k < take_neg; ++k) r.visible[neg[k]] = true;
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    if (r.visible[i]) {
      r.corpus.documents[i].label = r.truth[i];
      r.corpus.documents[i].provenance = Provenance::Manual;
    }
  }

  r.holdout.role = Role::D;
  auto hl = detail::class_assignment(spec.holdout_docs, spec.positive_fraction, rng);
  for (std::size_t i = 0; i < spec.holdout_docs; ++i) {
    auto d = detail::make_doc(detail::pad_id('h', i, spec.holdout_docs), hl[i], spec, rng);
    d.label = hl[i];
    d.provenance = Provenance::Manual;
    r.holdout.documents.push_back(std::move(d));
  }
  return r;
}

}  // namespace polsent
