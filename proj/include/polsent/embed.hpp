#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/types.hpp"
#include "polsent/util.hpp"
#include "polsent/vectorize.hpp"

namespace polsent {

enum class EmbedMode { SkipGram, CBOW };

inline std::string_view to_string(EmbedMode m) {
  return m == EmbedMode::SkipGram ? "sg" : "cbow";
}

inline EmbedMode parse_embed_mode(std::string_view s) {
  const auto l = to_lower_ascii(s);
  if (l == "sg" || l == "skipgram" || l == "skip-gram") return EmbedMode::SkipGram;
  if (l == "cbow") return EmbedMode::CBOW;
  throw UsageError("unknown embedding mode: " + std::string(s));
}

struct EmbedConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::size_t min_count = 5;
  EmbedMode mode = EmbedMode::SkipGram;
  std::uint64_t seed = 1;
  // 0 disables frequent-word subsampling.
  double subsample = 0.0;
  bool dynamic_window = false;
  // More than one thread trades reproducibility for speed.
  unsigned threads = 1;

  void validate() const {
    if (dim < 1) throw UsageError("dim must be >= 1");
    if (window < 1) throw UsageError("window must be >= 1");
    if (negatives < 1) throw UsageError("negatives must be >= 1");
    if (epochs < 0) throw UsageError("epochs must be >= 0");
    if (!(lr_start > lr_end && lr_end > 0.0)) {
      throw UsageError("learning rates must satisfy lr_start > lr_end > 0");
    }
    if (subsample < 0.0) throw UsageError("subsample must be >= 0");
  }

  nlohmann::json to_json() const {
    return {{"dim", dim},           {"window", window},
            {"negatives", negatives}, {"epochs", epochs},
            {"lr_start", lr_start}, {"lr_end", lr_end},
            {"min_count", min_count}, {"mode", to_string(mode)},
            {"seed", seed},         {"subsample", subsample},
            {"dynamic_window", dynamic_window}};
  }

  static EmbedConfig from_json(const nlohmann::json& j) {
    EmbedConfig c;
    c.dim = j.value("dim", c.dim);
    c.window = j.value("window", c.window);
    c.negatives = j.value("negatives", c.negatives);
    c.epochs = j.value("epochs", c.epochs);
    c.lr_start = j.value("lr_start", c.lr_start);
    c.lr_end = j.value("lr_end", c.lr_end);
    c.min_count = j.value("min_count", c.min_count);
    c.mode = parse_embed_mode(j.value("mode", std::string("sg")));
    c.seed = j.value("seed", c.seed);
    c.subsample = j.value("subsample", c.subsample);
    c.dynamic_window = j.value("dynamic_window", c.dynamic_window);
    return c;
  }

  std::uint64_t digest() const { return fnv1a(to_json().dump()); }
};

// Input (center) and output (context) tables, row-major V x dim.
template <typename Real>
struct BasicEmbeddingModel {
  Vocabulary vocab;
  EmbedConfig config;
  std::vector<Real> input;
  std::vector<Real> output;

  std::size_t dim() const { return static_cast<std::size_t>(config.dim); }
  std::size_t size() const { return vocab.size(); }

  std::span<Real> in_row(std::size_t i) { return {input.data() + i * dim(), dim()}; }
  std::span<const Real> in_row(std::size_t i) const { return {input.data() + i * dim(), dim()}; }
  std::span<Real> out_row(std::size_t i) { return {output.data() + i * dim(), dim()}; }
  std::span<const Real> out_row(std::size_t i) const {
    return {output.data() + i * dim(), dim()};
  }

  // Input rows uniform in [-0.5/dim, 0.5/dim), output rows zero.
  void initialize() {
    Rng rng(mix_seed(config.seed, 0x1417));
    input.assign(size() * dim(), Real(0));
    output.assign(size() * dim(), Real(0));
    for (auto& x : input) x = static_cast<Real>((rng.uniform() - 0.5) / config.dim);
  }

  friend bool operator==(const BasicEmbeddingModel& a, const BasicEmbeddingModel& b) {
    return a.vocab == b.vocab && a.config.to_json() == b.config.to_json() &&
           a.input == b.input && a.output == b.output;
  }
};

using EmbeddingModel = BasicEmbeddingModel<float>;

template <typename Real>
struct RowGrad {
  std::size_t row;
  std::vector<Real> grad;
};

template <typename Real>
struct LossGrad {
  double loss = 0.0;
  std::vector<RowGrad<Real>> input;   // gradients w.r.t. input rows
  std::vector<RowGrad<Real>> output;  // gradients w.r.t. output rows
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Real>
void add_row_grad(std::vector<RowGrad<Real>>& grads, std::size_t row, std::span<const double> g,
                  double scale) {
  auto it = std::find_if(grads.begin(), grads.end(), [&](const auto& r) { return r.row == row; });
  if (it == grads.end()) {
    grads.push_back({row, std::vector<Real>(g.size(), Real(0))});
    it = std::prev(grads.end());
  }
  for (std::size_t k = 0; k < g.size(); ++k) it->grad[k] += static_cast<Real>(scale * g[k]);
}

// Loss and gradients given the hidden vector h; fills grad_h.
template <typename Real>
double negative_sampling(const BasicEmbeddingModel<Real>& m, std::span<const double> h,
                         std::size_t target, std::span<const std::size_t> negatives,
                         std::vector<double>& grad_h, LossGrad<Real>& out) {
  const std::size_t dim = h.size();
  grad_h.assign(dim, 0.0);
  double loss = 0.0;
  auto score = [&](std::size_t row) {
    auto u = m.out_row(row);
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += static_cast<double>(u[k]) * h[k];
    return s;
  };
  auto step = [&](std::size_t row, bool positive) {
    const double s = score(row);
    loss -= positive ? log_sigmoid(s) : log_sigmoid(-s);
    const double g = positive ? sigmoid(s) - 1.0 : sigmoid(s);
    auto u = m.out_row(row);
    for (std::size_t k = 0; k < dim; ++k) grad_h[k] += g * static_cast<double>(u[k]);
    add_row_grad(out.output, row, h, g);
  };
  step(target, true);
  for (auto n : negatives) step(n, false);
  return loss;
}

template <typename Real>
void check_row(const BasicEmbeddingModel<Real>& m, std::size_t i) {
  if (i >= m.size()) throw UsageError("row index out of range: " + std::to_string(i));
}

}  // namespace detail

// -log s(u_ctx . v_cen) - sum log s(-u_neg . v_cen), v from the input table
// and u from the output table.
template <typename Real>
LossGrad<Real> sgns_loss_grad(std::size_t center, std::size_t context,
                              std::span<const std::size_t> negatives,
                              const BasicEmbeddingModel<Real>& m) {
  detail::check_row(m, center);
  detail::check_row(m, context);
  for (auto n : negatives) {
    detail::check_row(m, n);
    if (n == context) throw UsageError("negative sample equals the context word");
  }
  std::vector<double> h(m.dim());
  auto v = m.in_row(center);
  for (std::size_t k = 0; k < m.dim(); ++k) h[k] = static_cast<double>(v[k]);
  LossGrad<Real> out;
  std::vector<double> gh;
  out.loss = detail::negative_sampling(m, h, context, negatives, gh, out);
  detail::add_row_grad(out.input, center, std::span<const double>(gh), 1.0);
  return out;
}

// Same loss with the hidden vector set to the mean of the context rows.
// An empty context yields zero loss and no gradients.
template <typename Real>
LossGrad<Real> cbow_loss_grad(std::span<const std::size_t> context, std::size_t target,
                              std::span<const std::size_t> negatives,
                              const BasicEmbeddingModel<Real>& m) {
  LossGrad<Real> out;
  if (context.empty()) return out;
  detail::check_row(m, target);
  for (auto c : context) detail::check_row(m, c);
  for (auto n : negatives) {
    detail::check_row(m, n);
    if (n == target) throw UsageError("negative sample equals the target word");
  }
  std::vector<double> h(m.dim(), 0.0);
  for (auto c : context) {
    auto v = m.in_row(c);
    for (std::size_t k = 0; k < m.dim(); ++k) h[k] += static_cast<double>(v[k]);
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (auto& x : h) x *= inv;
  std::vector<double> gh;
  out.loss = detail::negative_sampling(m, h, target, negatives, gh, out);
  for (auto c : context) detail::add_row_grad(out.input, c, std::span<const double>(gh), inv);
  return out;
}

// Draws word indices with probability proportional to count^0.75.
class NoiseSampler {
 public:
  explicit NoiseSampler(std::span<const std::size_t> counts, double power = 0.75) {
    cdf_.reserve(counts.size());
    double acc = 0.0;
    for (auto c : counts) {
      acc += std::pow(static_cast<double>(c), power);
      cdf_.push_back(acc);
    }
    if (cdf_.empty() || acc <= 0.0) throw DataError("noise distribution has no mass");
    for (auto& x : cdf_) x /= acc;
    cdf_.back() = 1.0;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

  double probability(std::size_t i) const { return cdf_[i] - (i ? cdf_[i - 1] : 0.0); }
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

namespace detail {

template <typename Real>
Real relaxed_load(Real& x) {
  return std::atomic_ref<Real>(x).load(std::memory_order_relaxed);
}

template <typename Real>
void relaxed_add(Real& x, Real d) {
  std::atomic_ref<Real> r(x);
  r.store(r.load(std::memory_order_relaxed) + d, std::memory_order_relaxed);
}

// One negative-sampling SGD update against hidden vector h; accumulates
// the hidden-vector gradient into neu1e.
template <typename Real>
void sgd_pair(BasicEmbeddingModel<Real>& m, std::span<const Real> h, std::size_t row,
              bool positive, double lr, std::vector<Real>& neu1e) {
  auto u = m.out_row(row);
  double s = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) s += static_cast<double>(relaxed_load(u[k]) * h[k]);
  const double g = (positive ? 1.0 - sigmoid(s) : -sigmoid(s)) * lr;
  for (std::size_t k = 0; k < h.size(); ++k) {
    neu1e[k] += static_cast<Real>(g) * relaxed_load(u[k]);
    relaxed_add(u[k], static_cast<Real>(g) * h[k]);
  }
}

template <typename Real>
void train_shard(BasicEmbeddingModel<Real>& m, const std::vector<std::vector<std::size_t>>& docs,
                 std::size_t begin, std::size_t end, const NoiseSampler& noise,
                 const std::vector<double>& keep_prob, std::uint64_t seed, int epoch,
                 std::size_t total_tokens, std::atomic<std::size_t>& processed) {
  const auto& c = m.config;
  const std::size_t dim = m.dim();
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + begin));
  std::vector<Real> h(dim), neu1e(dim);
  std::vector<std::size_t> sent, ctx;
  const double planned = static_cast<double>(total_tokens) * c.epochs;
  for (std::size_t d = begin; d < end; ++d) {
    sent.clear();
    for (auto w : docs[d]) {
      if (keep_prob.empty() || rng.uniform() < keep_prob[w]) sent.push_back(w);
    }
    const std::size_t done = processed.fetch_add(docs[d].size(), std::memory_order_relaxed);
    const double progress = planned > 0 ? static_cast<double>(done) / planned : 0.0;
    const double lr = std::max(c.lr_end, c.lr_start - (c.lr_start - c.lr_end) * progress);
    for (std::size_t pos = 0; pos < sent.size(); ++pos) {
      const std::size_t word = sent[pos];
      int win = c.window;
      if (c.dynamic_window) win = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.window)));
      const std::size_t lo = pos >= static_cast<std::size_t>(win) ? pos - win : 0;
      const std::size_t hi = std::min(sent.size(), pos + win + 1);
      if (c.mode == EmbedMode::SkipGram) {
        auto v = m.in_row(word);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == pos) continue;
          const std::size_t context = sent[j];
          for (std::size_t k = 0; k < dim; ++k) h[k] = relaxed_load(v[k]);
          std::fill(neu1e.begin(), neu1e.end(), Real(0));
          sgd_pair(m, std::span<const Real>(h), context, true, lr, neu1e);
          for (int n = 0; n < c.negatives; ++n) {
            const std::size_t neg = noise(rng);
            if (neg == context) continue;
            sgd_pair(m, std::span<const Real>(h), neg, false, lr, neu1e);
          }
          for (std::size_t k = 0; k < dim; ++k) relaxed_add(v[k], neu1e[k]);
        }
      } else {
        ctx.clear();
        for (std::size_t j = lo; j < hi; ++j) {
          if (j != pos) ctx.push_back(sent[j]);
        }
        if (ctx.empty()) continue;
        std::fill(h.begin(), h.end(), Real(0));
        for (auto w : ctx) {
          auto v = m.in_row(w);
          for (std::size_t k = 0; k < dim; ++k) h[k] += relaxed_load(v[k]);
        }
        const Real inv = Real(1) / static_cast<Real>(ctx.size());
        for (auto& x : h) x *= inv;
        std::fill(neu1e.begin(), neu1e.end(), Real(0));
        sgd_pair(m, std::span<const Real>(h), word, true, lr, neu1e);
        for (int n = 0; n < c.negatives; ++n) {
          const std::size_t neg = noise(rng);
          if (neg == word) continue;
          sgd_pair(m, std::span<const Real>(h), neg, false, lr, neu1e);
        }
        for (auto w : ctx) {
          auto v = m.in_row(w);
          for (std::size_t k = 0; k < dim; ++k) relaxed_add(v[k], neu1e[k] * inv);
        }
      }
    }
  }
}

}  // namespace detail

// Window-based SGD with negative sampling. With config.threads <= 1 the
// result depends only on the corpus and config.
template <typename Real = float>
BasicEmbeddingModel<Real> train(std::span<const ProcessedDoc> corpus, const EmbedConfig& config) {
  config.validate();
  BasicEmbeddingModel<Real> m;
  m.config = config;
  m.vocab = build_vocab_by_count(corpus, config.min_count);
  if (m.vocab.empty()) throw DataError("vocabulary empty after min_count filtering");
  m.initialize();
  if (config.epochs == 0) return m;

  std::vector<std::vector<std::size_t>> docs;
  docs.reserve(corpus.size());
  std::size_t total = 0;
  for (const auto& d : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : d.tokens) {
      if (auto i = m.vocab.find(t)) ids.push_back(*i);
    }
    total += ids.size();
    docs.push_back(std::move(ids));
  }
  NoiseSampler noise(m.vocab.cfs());
  std::vector<double> keep;
  if (config.subsample > 0.0) {
    keep.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double f = static_cast<double>(m.vocab.cf(i)) / static_cast<double>(total);
      keep[i] = std::min(1.0, (std::sqrt(f / config.subsample) + 1.0) * config.subsample / f);
    }
  }
  std::atomic<std::size_t> processed{0};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    parallel_for(docs.size(), std::max(1u, config.threads), [&](std::size_t b, std::size_t e) {
      detail::train_shard(m, docs, b, e, noise, keep, config.seed, epoch, total, processed);
    });
  }
  return m;
}

struct DocVector {
  std::vector<double> values;
  bool empty = false;  // no in-vocabulary tokens
};

// Mean of the input rows of in-vocabulary tokens. With weights (indexed by
// vocabulary), a weighted mean instead.
template <typename Real>
DocVector doc_vector(const ProcessedDoc& doc, const BasicEmbeddingModel<Real>& m,
                     std::span<const double> weights = {}) {
  DocVector out{std::vector<double>(m.dim(), 0.0), false};
  double total = 0.0;
  for (const auto& t : doc.tokens) {
    auto i = m.vocab.find(t);
    if (!i) continue;
    const double w = weights.empty() ? 1.0 : weights[*i];
    auto v = m.in_row(*i);
    for (std::size_t k = 0; k < m.dim(); ++k) out.values[k] += w * static_cast<double>(v[k]);
    total += w;
  }
  if (total == 0.0) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    out.empty = true;
    return out;
  }
  for (auto& x : out.values) x /= total;
  return out;
}

template <typename Real>
double cosine(std::span<const Real> a, std::span<const Real> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct Neighbor {
  std::string word;
  double cosine;
};

// Exact top-k by cosine over input rows; ties go to the lower index.
template <typename Real>
std::vector<Neighbor> nearest(const BasicEmbeddingModel<Real>& m, const std::string& word,
                              std::size_t k) {
  if (k < 1) throw UsageError("k must be >= 1");
  auto q = m.vocab.find(word);
  if (!q) throw DataError("word not in vocabulary: " + word);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i == *q) continue;
    scored.emplace_back(cosine(m.in_row(*q), m.in_row(i)), i);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back({m.vocab.term(scored[i].second), scored[i].first});
  return out;
}

namespace detail {

inline constexpr char kEmbedMagic[8] = {'P', 'S', 'E', 'M', 'B', '0', '1', '\n'};

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view d) : d_(d) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, d_.data() + p_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    p_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = d_.substr(p_, n);
    p_ += n;
    return s;
  }

  bool done() const { return p_ == d_.size(); }

 private:
  void need(std::size_t n) const {
    if (p_ + n > d_.size()) throw DataError("embedding model file is truncated");
  }
  std::string_view d_;
  std::size_t p_ = 0;
};

}  // namespace detail

// Binary layout, little-endian: magic, u32 dim, u64 V, u8 mode, u64 config
// digest, u32 + JSON config, u64 n_docs, then per term u32 length, bytes,
// u64 df, u64 cf; then the input and output tables as float32.
template <typename Real>
std::string serialize_model(const BasicEmbeddingModel<Real>& m) {
  std::string out(detail::kEmbedMagic, sizeof(detail::kEmbedMagic));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  detail::put_le<std::uint64_t>(out, m.size());
  detail::put_le<std::uint8_t>(out, m.config.mode == EmbedMode::SkipGram ? 0 : 1);
  detail::put_le<std::uint64_t>(out, m.config.digest());
  const auto cfg = m.config.to_json().dump();
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  detail::put_le<std::uint64_t>(out, m.vocab.n_docs());
  for (std::size_t i = 0; i < m.size(); ++i) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.vocab.term(i).size()));
    out += m.vocab.term(i);
    detail::put_le<std::uint64_t>(out, m.vocab.df(i));
    detail::put_le<std::uint64_t>(out, m.vocab.cf(i));
  }
  for (auto x : m.input) detail::put_le<float>(out, static_cast<float>(x));
  for (auto x : m.output) detail::put_le<float>(out, static_cast<float>(x));
  return out;
}

template <typename Real = float>
BasicEmbeddingModel<Real> parse_model(std::string_view data) {
  detail::Reader r(data);
  if (r.bytes(sizeof(detail::kEmbedMagic)) !=
      std::string_view(detail::kEmbedMagic, sizeof(detail::kEmbedMagic))) {
    throw DataError("not an embedding model file");
  }
  const auto dim = r.get<std::uint32_t>();
  const auto V = r.get<std::uint64_t>();
  const auto mode = r.get<std::uint8_t>();
  const auto digest = r.get<std::uint64_t>();
  const auto cfg_len = r.get<std::uint32_t>();
  BasicEmbeddingModel<Real> m;
  try {
    m.config = EmbedConfig::from_json(nlohmann::json::parse(r.bytes(cfg_len)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad embedding config: ") + e.what());
  }
  if (m.config.digest() != digest) throw DataError("embedding config digest mismatch");
  if (static_cast<std::uint32_t>(m.config.dim) != dim ||
      (mode == 0) != (m.config.mode == EmbedMode::SkipGram)) {
    throw DataError("embedding header disagrees with config");
  }
  const auto n_docs = r.get<std::uint64_t>();
  std::vector<std::string> terms;
  std::vector<std::size_t> df, cf;
  for (std::uint64_t i = 0; i < V; ++i) {
    const auto len = r.get<std::uint32_t>();
    terms.emplace_back(r.bytes(len));
    df.push_back(r.get<std::uint64_t>());
    cf.push_back(r.get<std::uint64_t>());
  }
  m.vocab = Vocabulary(std::move(terms), std::move(df), std::move(cf), n_docs);
  m.input.resize(V * dim);
  m.output.resize(V * dim);
  for (auto& x : m.input) x = static_cast<Real>(r.get<float>());
  for (auto& x : m.output) x = static_cast<Real>(r.get<float>());
  if (!r.done()) throw DataError("trailing bytes in embedding model file");
  return m;
}

// "V dim" header, then one "word x1 ... xdim" line per term (input table).
template <typename Real>
std::string export_text(const BasicEmbeddingModel<Real>& m) {
  std::string out = std::to_string(m.size()) + ' ' + std::to_string(m.dim()) + '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.vocab.term(i);
    for (auto x : m.in_row(i)) {
      out += ' ';
      out += format_double(static_cast<double>(static_cast<float>(x)));
    }
    out += '\n';
  }
  return out;
}

}  // namespace polsent
