#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/embed.hpp"
#include "polsent/types.hpp"
#include "polsent/vectorize.hpp"

namespace polsent {

enum class FeatureKind { TfIdf, SkipGram, CBOW };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::TfIdf: return "tfidf";
    case FeatureKind::SkipGram: return "sg";
    case FeatureKind::CBOW: return "cbow";
  }
  return "tfidf";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  const auto l = to_lower_ascii(s);
  if (l == "tfidf" || l == "tf-idf") return FeatureKind::TfIdf;
  if (l == "sg" || l == "skipgram") return FeatureKind::SkipGram;
  if (l == "cbow") return FeatureKind::CBOW;
  throw UsageError("unknown feature kind: " + std::string(s));
}

struct FeatureConfig {
  FeatureKind kind = FeatureKind::TfIdf;
  std::size_t min_df = 2;
  bool normalize = true;
  EmbedConfig embed;

  nlohmann::json to_json() const {
    return {{"kind", to_string(kind)}, {"min_df", min_df}, {"normalize", normalize},
            {"embed", embed.to_json()}};
  }
};

// Document rows in one feature space. Fitted on a corpus without labels;
// embedding document vectors are stored as fully dense sparse rows.
class Featurizer {
 public:
  Featurizer(std::span<const ProcessedDoc> fit_corpus, const FeatureConfig& config)
      : config_(config) {
    if (config.kind == FeatureKind::TfIdf) {
      vocab_ = build_vocab(fit_corpus, config.min_df);
      dim_ = vocab_.size();
    } else {
      EmbedConfig ec = config.embed;
      ec.mode = config.kind == FeatureKind::SkipGram ? EmbedMode::SkipGram : EmbedMode::CBOW;
      model_ = train<float>(fit_corpus, ec);
      dim_ = model_.dim();
    }
  }

  std::size_t dim() const { return dim_; }
  const Vocabulary& vocab() const {
    return config_.kind == FeatureKind::TfIdf ? vocab_ : model_.vocab;
  }

  SparseVector row(const ProcessedDoc& doc) const {
    if (config_.kind == FeatureKind::TfIdf) return tfidf_row(doc, vocab_, config_.normalize);
    auto dv = doc_vector(doc, model_);
    SparseVector out;
    double norm = 0.0;
    for (double x : dv.values) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < dv.values.size(); ++k) {
      out.idx.push_back(k);
      out.val.push_back(config_.normalize && norm > 0.0 ? dv.values[k] / norm : dv.values[k]);
    }
    return out;
  }

  std::vector<SparseVector> rows(std::span<const ProcessedDoc> docs, unsigned threads = 1) const {
    std::vector<SparseVector> out(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = row(docs[i]);
    });
    return out;
  }

 private:
  FeatureConfig config_;
  Vocabulary vocab_;
  EmbeddingModel model_;
  std::size_t dim_ = 0;
};

}  // namespace polsent
