#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "polsent/evalmetrics.hpp"
#include "polsent/features.hpp"
#include "polsent/labelprop.hpp"
#include "polsent/textprep.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

// Batch sizes are totals per iteration, split equally across parties when
// stratifying.
struct Schedule {
  std::vector<std::size_t> batch_sizes = {1000, 10000, 20000};
  bool stratify_by_party = true;
  double guard_drop = 0.02;
  std::uint64_t seed = 1;

  void validate() const {
    for (auto b : batch_sizes) {
      if (b < 1) throw UsageError("batch sizes must be >= 1");
    }
    if (!(guard_drop >= 0.0)) throw UsageError("guard_drop must be >= 0");
  }
};

struct SelfLabelConfig {
  Schedule schedule;
  PrepConfig prep = PrepConfig::defaults();
  FeatureConfig features;
  std::size_t k = 10;
  std::optional<double> sigma;
  PropagateOptions propagation;
  double threshold = 0.5;
  // Pseudo-labels enter later graphs with their soft rows instead of one-hot.
  bool soft_seeds = false;
  unsigned threads = 1;
  // Test hook: called on each batch's decisions before they are merged.
  std::function<void(std::size_t iteration, std::vector<Decision>&)> corrupt_batch;
};

struct HoldoutScore {
  ConfusionMatrix cm;
  double macro_f1 = 0.0;

  nlohmann::json to_json() const {
    auto j = polsent::to_json(cm);
    j["macro_f1"] = macro_f1;
    return j;
  }
};

struct AuditRecord {
  std::size_t iteration = 0;  // 1-based; the final pass is batch_sizes.size() + 1
  bool final_pass = false;
  std::size_t requested = 0;
  bool truncated = false;
  std::vector<std::string> batch_ids;
  std::size_t pool_before = 0;
  std::size_t pool_after = 0;
  std::size_t abstained = 0;
  std::optional<HoldoutScore> before;
  std::optional<HoldoutScore> after;
  bool accepted = true;
  std::string note;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"iteration", iteration},
                     {"final_pass", final_pass},
                     {"requested", requested},
                     {"batch_size", batch_ids.size()},
                     {"truncated", truncated},
                     {"batch_ids", batch_ids},
                     {"pool_before", pool_before},
                     {"pool_after", pool_after},
                     {"abstained", abstained},
                     {"accepted", accepted},
                     {"seed", seed}};
    j["holdout_before"] = before ? before->to_json() : nlohmann::json(nullptr);
    j["holdout_after"] = after ? after->to_json() : nlohmann::json(nullptr);
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

// Append-only per-iteration log.
class AuditLog {
 public:
  void append(AuditRecord r) { records_.push_back(std::move(r)); }
  const std::vector<AuditRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::string jsonl() const {
    std::string out;
    for (const auto& r : records_) out += r.to_json().dump() + '\n';
    return out;
  }

 private:
  std::vector<AuditRecord> records_;
};

struct MachineLabel {
  std::string id;
  std::optional<Party> party;
  Label label = Label::Positive;
  double confidence = 0.0;
  std::size_t iteration = 0;
  bool low_confidence = false;
};

struct SelfLabelResult {
  DocumentSet labeled;              // seeds followed by machine-labeled documents
  std::size_t seed_count = 0;
  std::vector<MachineLabel> labels;  // machine labels in labeling order
  std::vector<std::string> remaining;  // unlabeled ids left when halted
  AuditLog audit;
  bool halted = false;
  std::optional<HoldoutScore> final_score;

  // Seeds (iteration 0) followed by machine labels.
  std::string labels_csv() const {
    std::string out = "id,party,label,confidence,iteration\n";
    for (std::size_t i = 0; i < seed_count; ++i) {
      const auto& d = labeled.documents[i];
      out += d.id + ',' + (d.party ? std::string(to_string(*d.party)) : "") + ',' +
             std::string(to_string(*d.label)) + ",1.000000,0\n";
    }
    for (const auto& m : labels) {
      out += m.id + ',' + (m.party ? std::string(to_string(*m.party)) : "") + ',' +
             std::string(to_string(m.label)) + ',' + format_fixed(m.confidence, 6) + ',' +
             std::to_string(m.iteration) + '\n';
    }
    return out;
  }
};

// visible keeps n - floor(n * fraction) documents, hidden the rest.
inline std::pair<DocumentSet, DocumentSet> holdback(const DocumentSet& labeled, double fraction,
                                                    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("fraction must lie in (0, 1)");
  const std::size_t n = labeled.size();
  const auto hidden_n = static_cast<std::size_t>(static_cast<double>(n) * fraction);
  if (hidden_n == 0 || hidden_n == n) throw UsageError("holdback leaves an empty side");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x401d));
  rng.shuffle(order);
  std::vector<bool> hide(n, false);
  for (std::size_t k = 0; k < hidden_n; ++k) hide[order[k]] = true;
  DocumentSet visible{{}, labeled.role}, hidden{{}, labeled.role};
  for (std::size_t i = 0; i < n; ++i) {
    (hide[i] ? hidden : visible).documents.push_back(labeled.documents[i]);
  }
  return {visible, hidden};
}

struct TransductionResult {
  ConfusionMatrix cm;
  double macro_f1 = 0.0;
  bool one_class_seeds = false;
  PropagationResult propagation;
};

// Propagates from the first |visible| rows over visible + hidden rows and
// scores the hidden rows against truth.
inline TransductionResult transduction_eval(std::span<const SparseVector> rows,
                                            std::span<const Label> visible,
                                            std::span<const Label> hidden_truth,
                                            const SelfLabelConfig& config = {}) {
  if (hidden_truth.empty()) throw UsageError("transduction needs hidden documents");
  if (rows.size() != visible.size() + hidden_truth.size()) {
    throw UsageError("row count must equal visible + hidden");
  }
  auto g = build_graph(rows, config.k, config.sigma, config.threads);
  auto seeds = LabelDistribution::unlabeled(rows.size());
  for (std::size_t i = 0; i < visible.size(); ++i) seeds.clamp(i, visible[i]);
  TransductionResult r;
  r.propagation = propagate(g, seeds, config.propagation);
  r.one_class_seeds = r.propagation.missing_class;
  auto dec = harden(r.propagation.dist, config.threshold);
  std::vector<Decision> hd(dec.begin() + static_cast<std::ptrdiff_t>(visible.size()), dec.end());
  r.cm = confusion(std::span<const Decision>(hd), hidden_truth);
  r.macro_f1 = macro_f1(r.cm);
  return r;
}

namespace detail {

// Per-iteration batch: equal shares per party, remainder dealt round-robin
// in party order, shortfalls of small parties passed on the same way.
inline std::vector<std::size_t> draw_batch(const std::vector<std::size_t>& pool,
                                           const std::vector<Document>& docs, std::size_t want,
                                           bool stratify, Rng& rng) {
  std::vector<std::size_t> shuffled = pool;
  rng.shuffle(shuffled);
  if (want >= shuffled.size()) return shuffled;
  if (!stratify) {
    shuffled.resize(want);
    return shuffled;
  }
  std::map<int, std::vector<std::size_t>> by_party;
  for (auto i : shuffled) {
    by_party[docs[i].party ? static_cast<int>(*docs[i].party) : -1].push_back(i);
  }
  std::vector<std::vector<std::size_t>*> groups;
  for (auto& [p, v] : by_party) groups.push_back(&v);
  std::vector<std::size_t> take(groups.size(), 0);
  std::size_t given = 0;
  while (given < want) {
    bool progress = false;
    for (std::size_t g = 0; g < groups.size() && given < want; ++g) {
      if (take[g] < groups[g]->size()) {
        ++take[g];
        ++given;
        progress = true;
      }
    }
    if (!progress) break;
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.insert(out.end(), groups[g]->begin(), groups[g]->begin() + static_cast<std::ptrdiff_t>(take[g]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Batch self-labeling against an unlabeled pool with a hold-out guard.
class SelfLabeler {
 public:
  SelfLabeler(const DocumentSet& seeds, const DocumentSet& unlabeled, const DocumentSet& holdout,
              SelfLabelConfig config)
      : config_(std::move(config)) {
    config_.schedule.validate();
    std::unordered_set<std::string> ids;
    auto add = [&](const DocumentSet& set, const char* what) {
      for (const auto& d : set.documents) {
        if (!ids.insert(d.id).second) {
          throw DataError(std::string("id ") + d.id + " appears twice across inputs (" + what + ")");
        }
        index_.emplace(d.id, docs_.size());
        docs_.push_back(d);
      }
    };
    add(seeds, "seeds");
    add(unlabeled, "unlabeled");
    add(holdout, "holdout");
    n_seeds_ = seeds.size();
    n_unlabeled_ = unlabeled.size();
    for (const auto& d : seeds.documents) {
      if (!d.label) throw DataError("seed document " + d.id + " has no label");
    }
    for (const auto& d : holdout.documents) {
      if (!d.label) throw DataError("holdout document " + d.id + " has no label");
    }
    if (config_.schedule.stratify_by_party) {
      for (const auto& d : unlabeled.documents) {
        if (!d.party) throw DataError("stratified schedule needs party tags; " + d.id + " has none");
      }
    }
    auto processed = run_pipeline(docs_, config_.prep, config_.threads);
    std::vector<ProcessedDoc> fit(processed.begin(),
                                  processed.begin() + static_cast<std::ptrdiff_t>(n_seeds_ + n_unlabeled_));
    Featurizer f(fit, config_.features);
    rows_ = f.rows(processed, config_.threads);
  }

  SelfLabelResult run() {
    SelfLabelResult res;
    const auto& sched = config_.schedule;
    // Current pool: index -> row of label scores; seeds are one-hot.
    std::vector<std::optional<std::array<double, 2>>> pool(docs_.size());
    for (std::size_t i = 0; i < n_seeds_; ++i) pool[i] = one_hot(*docs_[i].label);
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = n_seeds_; i < n_seeds_ + n_unlabeled_; ++i) unlabeled.push_back(i);
    std::vector<MachineLabel> labels;
    Rng rng(mix_seed(sched.seed, 0xba7c));

    auto score = evaluate_holdout(pool);
    for (std::size_t it = 0; it < sched.batch_sizes.size(); ++it) {
      AuditRecord rec;
      rec.iteration = it + 1;
      rec.requested = sched.batch_sizes[it];
      rec.seed = sched.seed;
      rec.pool_before = pool_size(pool);
      rec.before = score;
      if (unlabeled.empty()) {
        rec.note = "pool exhausted";
        rec.pool_after = rec.pool_before;
        rec.after = score;
        res.audit.append(rec);
        continue;
      }
      rec.truncated = rec.requested > unlabeled.size();
      auto batch = detail::draw_batch(unlabeled, docs_, rec.requested,
                                      sched.stratify_by_party, rng);
      check_hygiene(batch);
      for (auto i : batch) rec.batch_ids.push_back(docs_[i].id);

      auto prop = propagate_batch(pool, batch);
      auto dec = harden(prop.dist, config_.threshold);
      std::vector<Decision> bdec;
      for (std::size_t b = 0; b < batch.size(); ++b) bdec.push_back(dec[pool_nodes_ + b]);
      if (config_.corrupt_batch) config_.corrupt_batch(it + 1, bdec);

      auto next = pool;
      std::vector<MachineLabel> added;
      std::unordered_set<std::size_t> merged;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto i = batch[b];
        if (bdec[b] == Decision::Abstain) {
          ++rec.abstained;
          continue;
        }
        const Label l = bdec[b] == Decision::Positive ? Label::Positive : Label::Negative;
        const auto& y = prop.dist.Y[pool_nodes_ + b];
        next[i] = config_.soft_seeds ? y : one_hot(l);
        merged.insert(i);
        added.push_back({docs_[i].id, docs_[i].party, l, std::max(y[0], y[1]), it + 1, false});
      }
      auto after = evaluate_holdout(next);
      rec.after = after;
      if (after.macro_f1 < score.macro_f1 - sched.guard_drop) {
        rec.accepted = false;
        rec.note = "holdout macro-F1 fell from " + format_fixed(score.macro_f1, 4) + " to " +
                   format_fixed(after.macro_f1, 4);
        rec.pool_after = rec.pool_before;
        res.audit.append(rec);
        res.halted = true;
        break;
      }
      pool = std::move(next);
      labels.insert(labels.end(), added.begin(), added.end());
      std::erase_if(unlabeled, [&](std::size_t i) { return merged.contains(i); });
      rec.pool_after = pool_size(pool);
      res.audit.append(rec);
      score = after;
    }

    if (!res.halted) {
      AuditRecord rec;
      rec.iteration = sched.batch_sizes.size() + 1;
      rec.final_pass = true;
      rec.requested = unlabeled.size();
      rec.seed = sched.seed;
      rec.pool_before = pool_size(pool);
      rec.before = score;
      if (!unlabeled.empty()) {
        check_hygiene(unlabeled);
        for (auto i : unlabeled) rec.batch_ids.push_back(docs_[i].id);
        auto prop = propagate_batch(pool, unlabeled);
        for (std::size_t b = 0; b < unlabeled.size(); ++b) {
          const auto i = unlabeled[b];
          const auto& y = prop.dist.Y[pool_nodes_ + b];
          const Label l = y[0] >= y[1] ? Label::Positive : Label::Negative;
          const double conf = std::max(y[0], y[1]);
          const bool low = y[0] == y[1] || conf < config_.threshold;
          rec.abstained += low;
          pool[i] = config_.soft_seeds ? y : one_hot(l);
          labels.push_back({docs_[i].id, docs_[i].party, l, conf, rec.iteration, low});
        }
        unlabeled.clear();
      }
      rec.after = evaluate_holdout(pool);
      rec.pool_after = pool_size(pool);
      res.audit.append(rec);
      score = *rec.after;
    }
    res.final_score = score;

    res.labeled.role = Role::B;
    for (std::size_t i = 0; i < n_seeds_; ++i) res.labeled.documents.push_back(docs_[i]);
    res.seed_count = n_seeds_;
    for (const auto& m : labels) {
      auto d = docs_[index_.at(m.id)];
      d.label = m.label;
      d.provenance = Provenance::Machine;
      res.labeled.documents.push_back(std::move(d));
    }
    for (auto i : unlabeled) res.remaining.push_back(docs_[i].id);
    res.labels = std::move(labels);
    return res;
  }

  const std::vector<SparseVector>& rows() const { return rows_; }

 private:
  static std::array<double, 2> one_hot(Label l) {
    return l == Label::Positive ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
  }

  static std::size_t pool_size(const std::vector<std::optional<std::array<double, 2>>>& pool) {
    return static_cast<std::size_t>(std::count_if(pool.begin(), pool.end(), [](const auto& p) { return p.has_value(); }));
  }

  void check_hygiene(const std::vector<std::size_t>& batch) const {
    for (auto i : batch) {
      if (i < n_seeds_ || i >= n_seeds_ + n_unlabeled_) {
        throw std::logic_error("batch drew a seed or holdout document: " + docs_[i].id);
      }
    }
  }

  // Graph over pool nodes (clamped) followed by the given free nodes.
  PropagationResult propagate_batch(const std::vector<std::optional<std::array<double, 2>>>& pool,
                                    const std::vector<std::size_t>& free) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i]) nodes.push_back(i);
    }
    pool_nodes_ = nodes.size();
    nodes.insert(nodes.end(), free.begin(), free.end());
    std::vector<SparseVector> pts;
    pts.reserve(nodes.size());
    for (auto i : nodes) pts.push_back(rows_[i]);
    auto g = build_graph(std::span<const SparseVector>(pts), config_.k, config_.sigma, config_.threads);
    auto seeds = LabelDistribution::unlabeled(nodes.size());
    for (std::size_t p = 0; p < pool_nodes_; ++p) {
      seeds.Y[p] = *pool[nodes[p]];
      seeds.clamped[p] = true;
    }
    auto opts = config_.propagation;
    opts.threads = config_.threads;
    return propagate(g, seeds, opts);
  }

  HoldoutScore evaluate_holdout(const std::vector<std::optional<std::array<double, 2>>>& pool) {
    std::vector<std::size_t> hold;
    std::vector<Label> truth;
    for (std::size_t i = n_seeds_ + n_unlabeled_; i < docs_.size(); ++i) {
      hold.push_back(i);
      truth.push_back(*docs_[i].label);
    }
    HoldoutScore s;
    if (hold.empty()) return s;
    auto prop = propagate_batch(pool, hold);
    std::vector<Decision> dec;
    for (std::size_t b = 0; b < hold.size(); ++b) {
      const auto& y = prop.dist.Y[pool_nodes_ + b];
      dec.push_back(y[0] == y[1] ? Decision::Abstain
                                 : (y[0] > y[1] ? Decision::Positive : Decision::Negative));
    }
    s.cm = confusion(std::span<const Decision>(dec), std::span<const Label>(truth));
    s.macro_f1 = macro_f1(s.cm);
    return s;
  }

  SelfLabelConfig config_;
  std::vector<Document> docs_;  // seeds, then unlabeled, then holdout
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_seeds_ = 0;
  std::size_t n_unlabeled_ = 0;
  std::vector<SparseVector> rows_;
  std::size_t pool_nodes_ = 0;
};

inline SelfLabelResult run_schedule(const DocumentSet& seeds, const DocumentSet& unlabeled,
                                    const DocumentSet& holdout, const SelfLabelConfig& config) {
  return SelfLabeler(seeds, unlabeled, holdout, config).run();
}

}  // namespace polsent
