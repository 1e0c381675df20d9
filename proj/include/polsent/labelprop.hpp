#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "polsent/types.hpp"
#include "polsent/util.hpp"
#include "polsent/vectorize.hpp"

namespace polsent {

// Symmetric kNN graph in CSR form with RBF weights exp(-d^2 / sigma^2).
struct SimilarityGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  double sigma = 1.0;
  std::vector<std::size_t> row_ptr;  // n + 1 offsets
  std::vector<std::size_t> col;
  std::vector<double> weight;
  std::vector<double> row_sums;

  std::size_t edges() const { return col.size(); }
  bool isolated(std::size_t i) const { return row_sums[i] <= 0.0; }

  double w(std::size_t i, std::size_t j) const {
    auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? weight[static_cast<std::size_t>(it - col.begin())] : 0.0;
  }

  std::vector<std::size_t> isolated_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (isolated(i)) out.push_back(i);
    }
    return out;
  }
};

// Builds the graph from a squared-distance functor over n points. Each node
// links to its k nearest others (ties to the lower index), then edges are
// union-symmetrized. Without sigma, the median linked-pair distance is used,
// or 1 when that median is 0.
template <typename Dist2>
SimilarityGraph build_graph(std::size_t n, Dist2&& dist2, std::size_t k,
                            std::optional<double> sigma = std::nullopt, unsigned threads = 1) {
  if (n < 2) throw UsageError("graph needs at least two nodes");
  if (k < 1) throw UsageError("k must be >= 1");
  if (sigma && !(*sigma > 0.0)) throw UsageError("sigma must be positive");
  const std::size_t kk = std::min(k, n - 1);
  std::vector<std::vector<std::pair<double, std::size_t>>> knn(n);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = b; i < e; ++i) {
      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) cand.emplace_back(dist2(i, j), j);
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk), cand.end());
      knn[i].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk));
    }
  });
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [d2, j] : knn[i]) {
      adj[i].emplace_back(j, d2);
      adj[j].emplace_back(i, d2);
    }
  }
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = adj[i];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end(),
                        [](const auto& x, const auto& y) { return x.first == y.first; }),
            a.end());
    for (auto [j, d2] : a) {
      if (j > i) dists.push_back(std::sqrt(d2));
    }
  }
  SimilarityGraph g;
  g.n = n;
  g.k = kk;
  if (sigma) {
    g.sigma = *sigma;
  } else {
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    const double med = m % 2 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    g.sigma = med > 0.0 ? med : 1.0;
  }
  const double s2 = g.sigma * g.sigma;
  g.row_ptr.assign(n + 1, 0);
  g.row_sums.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [j, d2] : adj[i]) {
      const double w = std::exp(-d2 / s2);
      g.col.push_back(j);
      g.weight.push_back(w);
      g.row_sums[i] += w;
    }
    g.row_ptr[i + 1] = g.col.size();
  }
  return g;
}

inline SimilarityGraph build_graph(std::span<const std::vector<double>> points, std::size_t k,
                                   std::optional<double> sigma = std::nullopt,
                                   unsigned threads = 1) {
  for (const auto& p : points) {
    if (p.size() != points[0].size()) throw UsageError("vectors differ in dimension");
  }
  return build_graph(
      points.size(),
      [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t d = 0; d < points[i].size(); ++d) {
          const double x = points[i][d] - points[j][d];
          s += x * x;
        }
        return s;
      },
      k, sigma, threads);
}

inline SimilarityGraph build_graph(std::span<const SparseVector> points, std::size_t k,
                                   std::optional<double> sigma = std::nullopt,
                                   unsigned threads = 1) {
  return build_graph(
      points.size(), [&](std::size_t i, std::size_t j) { return squared_distance(points[i], points[j]); },
      k, sigma, threads);
}

// Rows are (P(positive), P(negative)).
struct LabelDistribution {
  std::vector<std::array<double, 2>> Y;
  std::vector<bool> clamped;

  std::size_t size() const { return Y.size(); }

  // All rows uniform and free.
  static LabelDistribution unlabeled(std::size_t n) {
    return {std::vector<std::array<double, 2>>(n, {0.5, 0.5}), std::vector<bool>(n, false)};
  }

  void clamp(std::size_t i, Label l) {
    Y.at(i) = l == Label::Positive ? std::array<double, 2>{1.0, 0.0}
                                   : std::array<double, 2>{0.0, 1.0};
    clamped.at(i) = true;
  }

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;
};

struct PropagateOptions {
  double eps = 1e-6;
  std::size_t max_iter = 1000;
  bool class_mass_normalization = false;
  unsigned threads = 1;
};

struct PropagationResult {
  LabelDistribution dist;
  std::size_t iterations = 0;
  double final_delta = 0.0;
  bool converged = false;
  std::vector<std::size_t> isolated;  // free nodes with no edges
  std::vector<double> deltas;         // max row change per sweep
  bool missing_class = false;         // some class has no seed

  nlohmann::json report() const {
    return {{"iterations", iterations},
            {"final_delta", final_delta},
            {"converged", converged},
            {"isolated_nodes", isolated},
            {"missing_class", missing_class}};
  }
};

// Jacobi sweeps Y <- D^-1 W Y with seed rows re-clamped and free rows
// renormalized, until the largest change drops below eps.
inline PropagationResult propagate(const SimilarityGraph& g, const LabelDistribution& seeds,
                                   const PropagateOptions& opt = {}) {
  if (seeds.size() != g.n || seeds.clamped.size() != g.n) {
    throw UsageError("seed distribution size does not match graph");
  }
  if (!(opt.eps > 0.0)) throw UsageError("eps must be positive");
  PropagationResult res;
  std::array<bool, 2> seen{false, false};
  for (std::size_t i = 0; i < g.n; ++i) {
    if (!seeds.clamped[i]) {
      if (g.isolated(i)) res.isolated.push_back(i);
      continue;
    }
    seen[seeds.Y[i][0] >= seeds.Y[i][1] ? 0 : 1] = true;
  }
  res.missing_class = !(seen[0] && seen[1]);
  LabelDistribution cur = seeds;
  for (auto i : res.isolated) cur.Y[i] = {0.5, 0.5};
  LabelDistribution next = cur;
  std::vector<double> chunk_delta;
  while (res.iterations < opt.max_iter) {
    const unsigned threads = std::max(1u, opt.threads);
    chunk_delta.assign(threads, 0.0);
    const std::size_t chunk = (g.n + threads - 1) / threads;
    parallel_for(g.n, threads, [&](std::size_t b, std::size_t e) {
      double local = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        if (cur.clamped[i] || g.isolated(i)) continue;
        std::array<double, 2> acc{0.0, 0.0};
        for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
          acc[0] += g.weight[p] * cur.Y[g.col[p]][0];
          acc[1] += g.weight[p] * cur.Y[g.col[p]][1];
        }
        const double s = acc[0] + acc[1];
        if (s > 0.0) {
          acc[0] /= s;
          acc[1] /= s;
        } else {
          acc = {0.5, 0.5};
        }
        local = std::max({local, std::abs(acc[0] - cur.Y[i][0]), std::abs(acc[1] - cur.Y[i][1])});
        next.Y[i] = acc;
      }
      chunk_delta[b / chunk] = local;
    });
    ++res.iterations;
    res.final_delta = *std::max_element(chunk_delta.begin(), chunk_delta.end());
    res.deltas.push_back(res.final_delta);
    std::swap(cur, next);
    next.Y = cur.Y;
    if (res.final_delta < opt.eps) {
      res.converged = true;
      break;
    }
  }
  if (opt.class_mass_normalization && !res.missing_class) {
    std::array<double, 2> prior{0.0, 0.0}, mass{0.0, 0.0};
    for (std::size_t i = 0; i < g.n; ++i) {
      auto& target = cur.clamped[i] ? prior : mass;
      target[0] += cur.Y[i][0];
      target[1] += cur.Y[i][1];
    }
    const double pt = prior[0] + prior[1];
    for (std::size_t i = 0; i < g.n; ++i) {
      if (cur.clamped[i]) continue;
      std::array<double, 2> y = cur.Y[i];
      for (int c = 0; c < 2; ++c) y[c] = mass[c] > 0.0 ? y[c] * prior[c] / pt / mass[c] : 0.0;
      const double s = y[0] + y[1];
      cur.Y[i] = s > 0.0 ? std::array<double, 2>{y[0] / s, y[1] / s} : std::array<double, 2>{0.5, 0.5};
    }
  }
  res.dist = std::move(cur);
  return res;
}

// Fixed point of propagate by a direct sparse solve of
// (I - T_uu) Y_u = T_ul Y_l. Every free node must reach a seed.
inline LabelDistribution closed_form(const SimilarityGraph& g, const LabelDistribution& seeds) {
  if (seeds.size() != g.n) throw UsageError("seed distribution size does not match graph");
  std::vector<bool> reach(g.n, false);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.n; ++i) {
    if (seeds.clamped[i]) {
      reach[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
      if (g.weight[p] > 0.0 && !reach[g.col[p]]) {
        reach[g.col[p]] = true;
        queue.push_back(g.col[p]);
      }
    }
  }
  std::vector<std::ptrdiff_t> uidx(g.n, -1);
  std::ptrdiff_t nu = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    if (seeds.clamped[i]) continue;
    if (!reach[i] || g.isolated(i)) {
      throw DataError("singular system: node " + std::to_string(i) + " has no path to a seed");
    }
    uidx[i] = nu++;
  }
  LabelDistribution out = seeds;
  if (nu == 0) return out;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, 2);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (uidx[i] < 0) continue;
    const auto r = uidx[i];
    trips.emplace_back(r, r, 1.0);
    for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
      const auto j = g.col[p];
      const double t = g.weight[p] / g.row_sums[i];
      if (uidx[j] >= 0) {
        trips.emplace_back(r, uidx[j], -t);
      } else {
        rhs(r, 0) += t * seeds.Y[j][0];
        rhs(r, 1) += t * seeds.Y[j][1];
      }
    }
  }
  Eigen::SparseMatrix<double> A(nu, nu);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw DataError("singular propagation system");
  Eigen::MatrixXd Yu = lu.solve(rhs);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (uidx[i] >= 0) out.Y[i] = {Yu(uidx[i], 0), Yu(uidx[i], 1)};
  }
  return out;
}

// Argmax when it reaches threshold; exact ties abstain.
inline std::vector<Decision> harden(const LabelDistribution& dist, double threshold = 0.5) {
  if (!(threshold >= 0.5 && threshold < 1.0)) {
    throw UsageError("harden threshold must lie in [0.5, 1)");
  }
  std::vector<Decision> out;
  out.reserve(dist.size());
  for (const auto& y : dist.Y) {
    if (y[0] == y[1]) {
      out.push_back(Decision::Abstain);
    } else if (y[0] > y[1]) {
      out.push_back(y[0] >= threshold ? Decision::Positive : Decision::Abstain);
    } else {
      out.push_back(y[1] >= threshold ? Decision::Negative : Decision::Abstain);
    }
  }
  return out;
}

inline std::string graph_csv(const SimilarityGraph& g) {
  std::string out = "src,dst,weight\n";
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
      out += std::to_string(i) + ',' + std::to_string(g.col[p]) + ',' + format_double(g.weight[p]) + '\n';
    }
  }
  return out;
}

}  // namespace polsent
