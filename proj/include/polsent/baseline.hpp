#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsent/evalmetrics.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"
#include "polsent/vectorize.hpp"

namespace polsent {

struct TrainConfig {
  double reg_lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 1;
  // Project w onto the ball of radius 1/sqrt(lambda) after each step.
  bool project = true;

  void validate() const {
    if (!(reg_lambda > 0.0)) throw UsageError("reg_lambda must be positive");
    if (epochs < 1) throw UsageError("epochs must be >= 1");
  }
};

// sign(w.x + b); a score of exactly 0 counts as Positive.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> objective;  // training objective after each epoch

  std::size_t dim() const { return weights.size(); }
};

namespace detail {

inline double row_dot(std::span<const double> w, const SparseVector& x) { return x.dot(w); }

inline double row_dot(std::span<const double> w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * x[k];
  return s;
}

inline void row_axpy(std::span<double> w, const SparseVector& x, double c) {
  for (std::size_t k = 0; k < x.idx.size(); ++k) w[x.idx[k]] += c * x.val[k];
}

inline void row_axpy(std::span<double> w, const std::vector<double>& x, double c) {
  for (std::size_t k = 0; k < x.size(); ++k) w[k] += c * x[k];
}

inline double row_sq(const SparseVector& x) { return x.squared_norm(); }

inline double row_sq(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline void check_dim(const SparseVector& x, std::size_t dim) {
  if (!x.idx.empty() && x.idx.back() >= dim) {
    throw UsageError("feature index " + std::to_string(x.idx.back()) + " exceeds dimension " +
                     std::to_string(dim));
  }
}

inline void check_dim(const std::vector<double>& x, std::size_t dim) {
  if (x.size() != dim) {
    throw UsageError("feature dimension " + std::to_string(x.size()) + " does not match " +
                     std::to_string(dim));
  }
}

inline double sign_of(Label l) { return l == Label::Positive ? 1.0 : -1.0; }

}  // namespace detail

inline double decision_score(const LinearModel& m, const SparseVector& x) {
  return detail::row_dot(m.weights, x) + m.bias;
}

inline double decision_score(const LinearModel& m, const std::vector<double>& x) {
  return detail::row_dot(m.weights, x) + m.bias;
}

// lambda/2 (|w|^2 + b^2) + mean hinge loss. The bias is the weight of a
// constant feature, so it is regularized too.
template <typename Row>
double svm_objective(const LinearModel& m, std::span<const Row> rows, std::span<const Label> labels,
                     double lambda) {
  double reg = m.bias * m.bias;
  for (double w : m.weights) reg += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    loss += std::max(0.0, 1.0 - detail::sign_of(labels[i]) * decision_score(m, rows[i]));
  }
  return 0.5 * lambda * reg + loss / static_cast<double>(rows.size());
}

struct SvmGradient {
  std::vector<double> weights;
  double bias = 0.0;
};

// Subgradient of svm_objective; examples exactly on the margin contribute nothing.
template <typename Row>
SvmGradient svm_subgradient(const LinearModel& m, std::span<const Row> rows, std::span<const Label> labels,
                            double lambda) {
  SvmGradient g{m.weights, m.bias};
  for (auto& w : g.weights) w *= lambda;
  g.bias *= lambda;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = detail::sign_of(labels[i]);
    if (y * decision_score(m, rows[i]) < 1.0) {
      detail::row_axpy(g.weights, rows[i], -y * inv_n);
      g.bias -= y * inv_n;
    }
  }
  return g;
}

// Pegasos: step 1/(lambda t) over a seeded shuffle each epoch. Weights are
// kept as scale * v so each step costs O(nnz).
template <typename Row>
LinearModel train_svm(std::span<const Row> rows, std::span<const Label> labels, std::size_t dim,
                      const TrainConfig& config = {}) {
  config.validate();
  if (rows.size() != labels.size()) throw UsageError("features and labels differ in length");
  const auto npos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Positive));
  if (npos == 0 || npos == labels.size()) throw DataError("training data must contain both classes");
  for (const auto& r : rows) detail::check_dim(r, dim);

  const double lambda = config.reg_lambda;
  std::vector<double> v(dim, 0.0);
  double vb = 0.0;
  double scale = 1.0;
  double sq = 0.0;  // |v|^2 + vb^2
  Rng rng(mix_seed(config.seed, 0x5f3));
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t t = 0;
  LinearModel m;
  auto materialize = [&] {
    m.weights.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) m.weights[k] = scale * v[k];
    m.bias = scale * vb;
  };
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = detail::sign_of(labels[i]);
      const double margin = y * scale * (detail::row_dot(v, rows[i]) + vb);
      const double shrink = 1.0 - eta * lambda;
      if (shrink <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        vb = 0.0;
        scale = 1.0;
        sq = 0.0;
      } else {
        scale *= shrink;
      }
      if (margin < 1.0) {
        const double c = eta * y / scale;
        const double dot = detail::row_dot(v, rows[i]);
        sq += 2.0 * c * (dot + vb) + c * c * (detail::row_sq(rows[i]) + 1.0);
        detail::row_axpy(v, rows[i], c);
        vb += c;
      }
      if (config.project) {
        const double norm = scale * std::sqrt(std::max(sq, 0.0));
        const double radius = 1.0 / std::sqrt(lambda);
        if (norm > radius) scale *= radius / norm;
      }
      if (scale < 1e-9) {
        for (auto& x : v) x *= scale;
        vb *= scale;
        sq *= scale * scale;
        scale = 1.0;
      }
    }
    materialize();
    m.objective.push_back(svm_objective<Row>(m, rows, labels, lambda));
  }
  return m;
}

template <typename Row>
std::vector<Label> predict(const LinearModel& m, std::span<const Row> rows) {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    detail::check_dim(r, m.dim());
    out.push_back(decision_score(m, r) >= 0.0 ? Label::Positive : Label::Negative);
  }
  return out;
}

// Stratified fold ids: each class is shuffled and dealt round-robin, the
// deal continuing across classes so fold sizes differ by at most one.
inline std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds < 2) throw UsageError("need at least two folds");
  std::vector<std::size_t> out(labels.size());
  Rng rng(mix_seed(seed, 0xf01d));
  std::size_t deal = 0;
  for (Label cls : {Label::Positive, Label::Negative}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    if (idx.size() < folds) {
      throw DataError("class " + std::string(to_string(cls)) + " has " + std::to_string(idx.size()) +
                      " examples, fewer than " + std::to_string(folds) + " folds");
    }
    rng.shuffle(idx);
    for (auto i : idx) out[i] = deal++ % folds;
  }
  return out;
}

struct CVResult {
  std::vector<double> f1;  // macro-F1 per fold
  double mean = 0.0;
  double std = 0.0;

  nlohmann::json to_json() const { return {{"folds", f1}, {"mean", mean}, {"std", std}}; }
};

template <typename Row>
CVResult cross_validate(std::span<const Row> rows, std::span<const Label> labels, std::size_t dim,
                        std::size_t folds = 5, const TrainConfig& config = {},
                        std::uint64_t seed = 1, unsigned threads = 1) {
  if (rows.size() != labels.size()) throw UsageError("features and labels differ in length");
  const auto fold = stratified_folds(labels, folds, seed);
  CVResult res;
  res.f1.assign(folds, 0.0);
  parallel_for(folds, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t f = b; f < e; ++f) {
      std::vector<Row> tr, te;
      std::vector<Label> ltr, lte;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (fold[i] == f) {
          te.push_back(rows[i]);
          lte.push_back(labels[i]);
        } else {
          tr.push_back(rows[i]);
          ltr.push_back(labels[i]);
        }
      }
      auto m = train_svm<Row>(tr, ltr, dim, config);
      auto pred = predict<Row>(m, te);
      res.f1[f] = macro_f1(confusion(std::span<const Label>(pred), std::span<const Label>(lte)));
    }
  });
  res.mean = std::accumulate(res.f1.begin(), res.f1.end(), 0.0) / static_cast<double>(folds);
  double var = 0.0;
  for (double x : res.f1) var += (x - res.mean) * (x - res.mean);
  res.std = std::sqrt(var / static_cast<double>(folds));
  return res;
}

struct GridResult {
  double best_lambda = 0.0;
  std::vector<std::pair<double, CVResult>> scores;
};

// Picks reg_lambda by mean CV macro-F1; earlier grid entries win ties.
template <typename Row>
GridResult select_lambda(std::span<const Row> rows, std::span<const Label> labels, std::size_t dim,
                         std::span<const double> grid, TrainConfig config = {},
                         std::size_t folds = 5, std::uint64_t seed = 1) {
  if (grid.empty()) throw UsageError("empty lambda grid");
  GridResult g;
  double best = -1.0;
  for (double l : grid) {
    config.reg_lambda = l;
    auto cv = cross_validate<Row>(rows, labels, dim, folds, config, seed);
    if (cv.mean > best) {
      best = cv.mean;
      g.best_lambda = l;
    }
    g.scores.emplace_back(l, cv);
  }
  return g;
}

inline constexpr std::array<double, 4> kLambdaGrid = {1e-5, 1e-4, 1e-3, 1e-2};

inline nlohmann::json to_json(const LinearModel& m) {
  return {{"dim", m.dim()}, {"bias", m.bias}, {"objective", m.objective}, {"weights", m.weights}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
  try {
    LinearModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    if (j.contains("objective")) m.objective = j.at("objective").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != m.weights.size()) {
      throw DataError("model dim does not match weight count");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad linear model: ") + e.what());
  }
}

}  // namespace polsent
