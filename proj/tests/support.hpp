#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "polsent/embed.hpp"
#include "polsent/labelprop.hpp"
#include "polsent/topics.hpp"
#include "polsent/util.hpp"

namespace support {

namespace fs = std::filesystem;

inline std::string fixture(const std::string& name) { return std::string(POLSENT_FIXTURE_DIR) + "/" + name; }
inline std::string resource(const std::string& name) { return std::string(POLSENT_RESOURCE_DIR) + "/" + name; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "polsent") {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code = -1;
  std::string output;
};

// Runs the CLI through the shell from dir, capturing stdout and stderr.
inline CliResult run_cli(const std::string& args, const std::string& dir = ".",
                         const std::string& env = "") {
  const std::string cmd = "cd '" + dir + "' && " + env + (env.empty() ? "" : " ") + "'" +
                          POLSENT_CLI + "' " + args + " 2>&1 </dev/null";
  CliResult r;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) r.output.append(buf.data(), got);
  const int status = pclose(pipe.release());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Random 30-node kNN graph with one seed per connected component and
// both classes present.
struct GraphCase {
  polsent::SimilarityGraph graph;
  polsent::LabelDistribution seeds;
};

inline GraphCase random_graph_case(std::uint64_t seed, std::size_t n = 30, std::size_t k = 5,
                                   std::size_t dim = 4) {
  polsent::Rng rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = rng.uniform();
  }
  GraphCase c{polsent::build_graph(std::span<const std::vector<double>>(pts), k), {}};
  c.seeds = polsent::LabelDistribution::unlabeled(n);
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::deque<std::size_t> q{s};
    comp[s] = ncomp;
    std::vector<std::size_t> members;
    while (!q.empty()) {
      auto i = q.front();
      q.pop_front();
      members.push_back(i);
      for (std::size_t p = c.graph.row_ptr[i]; p < c.graph.row_ptr[i + 1]; ++p) {
        if (comp[c.graph.col[p]] < 0) {
          comp[c.graph.col[p]] = ncomp;
          q.push_back(c.graph.col[p]);
        }
      }
    }
    const auto pick = members[rng.below(members.size())];
    c.seeds.clamp(pick, rng.below(2) ? polsent::Label::Positive : polsent::Label::Negative);
    ++ncomp;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t extra = 2 + rng.below(4);
  for (std::size_t t = 0; t < extra; ++t) {
    c.seeds.clamp(order[t], t % 2 ? polsent::Label::Positive : polsent::Label::Negative);
  }
  return c;
}

// Documents mixing two disjoint 25-word lexicons. Within a lexicon the
// first five words carry four times the weight of the rest.
struct TopicCorpus {
  std::vector<polsent::ProcessedDoc> docs;
  std::array<std::vector<std::string>, 2> top5;
};

inline TopicCorpus topic_corpus(std::uint64_t seed, std::size_t n_docs = 200) {
  polsent::Rng rng(seed);
  TopicCorpus c;
  std::array<std::vector<std::string>, 2> lex;
  for (int l = 0; l < 2; ++l) {
    for (int w = 0; w < 25; ++w) lex[l].push_back(std::string(1, "xy"[l]) + std::to_string(100 + w));
    c.top5[l].assign(lex[l].begin(), lex[l].begin() + 5);
  }
  auto draw = [&](const std::vector<std::string>& words) -> const std::string& {
    const double u = rng.uniform() * 40.0;
    if (u < 20.0) return words[static_cast<std::size_t>(u / 4.0)];
    return words[5 + static_cast<std::size_t>(u - 20.0)];
  };
  for (std::size_t d = 0; d < n_docs; ++d) {
    polsent::ProcessedDoc doc;
    doc.id = "t" + std::to_string(d);
    const double mix = rng.uniform() < 0.5 ? 0.9 : 0.1;
    const auto len = 20 + rng.below(21);
    for (std::uint64_t t = 0; t < len; ++t) doc.tokens.push_back(draw(lex[rng.uniform() < mix ? 0 : 1]));
    c.docs.push_back(std::move(doc));
  }
  return c;
}

// Greedy alignment of topics to lexicons by top-5 overlap; returns the
// overlap of each aligned pair.
inline std::vector<std::size_t> topic_recovery(const polsent::TopicModel& m, const TopicCorpus& c) {
  auto top = polsent::top_words(m, 5);
  std::vector<std::size_t> result;
  std::set<std::size_t> used_topics, used_lex;
  for (std::size_t round = 0; round < 2; ++round) {
    std::size_t best = 0, bt = 0, bl = 0;
    bool found = false;
    for (std::size_t t = 0; t < top.size(); ++t) {
      if (used_topics.contains(t)) continue;
      for (std::size_t l = 0; l < 2; ++l) {
        if (used_lex.contains(l)) continue;
        std::size_t overlap = 0;
        for (const auto& w : top[t]) {
          overlap += std::count(c.top5[l].begin(), c.top5[l].end(), w.word);
        }
        if (!found || overlap > best) {
          best = overlap;
          bt = t;
          bl = l;
          found = true;
        }
      }
    }
    used_topics.insert(bt);
    used_lex.insert(bl);
    result.push_back(best);
  }
  return result;
}

// Model over V synthetic words with random tables, in double precision.
inline polsent::BasicEmbeddingModel<double> random_model(std::uint64_t seed, std::size_t V = 8,
                                                         int dim = 10, double scale = 0.5) {
  polsent::ProcessedDoc d;
  for (std::size_t i = 0; i < V; ++i) d.tokens.push_back("w" + std::to_string(i));
  polsent::BasicEmbeddingModel<double> m;
  m.config.dim = dim;
  m.config.min_count = 1;
  m.vocab = polsent::build_vocab_by_count(std::span<const polsent::ProcessedDoc>(&d, 1), 1);
  polsent::Rng rng(seed);
  m.input.resize(V * static_cast<std::size_t>(dim));
  m.output.resize(V * static_cast<std::size_t>(dim));
  for (auto& x : m.input) x = (rng.uniform() * 2.0 - 1.0) * scale;
  for (auto& x : m.output) x = (rng.uniform() * 2.0 - 1.0) * scale;
  return m;
}

// Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||)
// over every row the loss reports, with central differences of step h.
template <typename LossFn>
double gradient_error(polsent::BasicEmbeddingModel<double>& m, LossFn&& loss_grad, double h = 1e-5) {
  auto lg = loss_grad(m);
  double diff2 = 0.0, an2 = 0.0, nu2 = 0.0;
  auto check = [&](const auto& grads, bool input) {
    for (const auto& rg : grads) {
      auto row = input ? m.in_row(rg.row) : m.out_row(rg.row);
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double keep = row[k];
        row[k] = keep + h;
        const double up = loss_grad(m).loss;
        row[k] = keep - h;
        const double down = loss_grad(m).loss;
        row[k] = keep;
        const double num = (up - down) / (2.0 * h);
        diff2 += (rg.grad[k] - num) * (rg.grad[k] - num);
        an2 += rg.grad[k] * rg.grad[k];
        nu2 += num * num;
      }
    }
  };
  check(lg.input, true);
  check(lg.output, false);
  const double denom = std::sqrt(an2) + std::sqrt(nu2);
  return denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom;
}

inline bool files_identical(const std::string& a, const std::string& b) {
  return fs::exists(a) && fs::exists(b) && polsent::read_file(a) == polsent::read_file(b);
}

}  // namespace support
