#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "polsent/annotate.hpp"
#include "polsent/baseline.hpp"
#include "polsent/corpus.hpp"
#include "polsent/embed.hpp"
#include "polsent/evalmetrics.hpp"
#include "polsent/features.hpp"
#include "polsent/labelprop.hpp"
#include "polsent/selflabel.hpp"
#include "polsent/synthgen.hpp"
#include "polsent/textprep.hpp"
#include "polsent/topics.hpp"
#include "polsent/vectorize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polsent;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitGuard = 3;

struct GuardHalt : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

// Which stage wrote a file, judged from its first bytes.
std::string sniff_stage(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string head(256, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.starts_with("PSEMB")) return "embed";
  if (head.starts_with("# n_docs")) return "vocab";
  if (head.starts_with("doc_id,term_index")) return "tfidf";
  if (head.starts_with("id,party,label,confidence")) return "selflabel or propagate";
  if (head.starts_with("rank,ngram")) return "ngrams";
  if (head.starts_with("id,label")) return "synth (truth file)";
  if (head.starts_with("src,dst,weight")) return "propagate (graph)";
  if (head.find("\"tokens\"") != std::string::npos) return "prep";
  if (head.find("\"iteration\"") != std::string::npos) return "selflabel (audit)";
  return "";
}

[[noreturn]] void mismatch(const std::string& path, const std::string& expected) {
  const auto stage = sniff_stage(path);
  throw DataError("format mismatch: " + path + " is not " + expected +
                  (stage.empty() ? "" : "; it looks like output of stage '" + stage + "'"));
}

DocumentSet read_docs(const std::string& path) {
  if (!fs::exists(path)) throw DataError("no such file: " + path);
  const auto stage = sniff_stage(path);
  if (!stage.empty()) mismatch(path, "a document file");
  IngestResult r;
  try {
    r = ingest(path);
  } catch (const UsageError&) {
    r = ingest(path, Format::JSONL);
  }
  if (!r.rejects.empty()) {
    throw DataError(path + ": " + std::to_string(r.rejects.size()) + " malformed records, first at line " +
                    std::to_string(r.rejects[0].line) + " (" + r.rejects[0].reason + ")");
  }
  return r.set;
}

std::vector<ProcessedDoc> read_processed(const std::string& path) {
  if (!fs::exists(path)) throw DataError("no such file: " + path);
  if (sniff_stage(path) != "prep") mismatch(path, "a processed-document file from stage 'prep'");
  return parse_processed_jsonl(read_file(path));
}

// Records inputs, outputs and effective options; written next to the
// first output unless --manifest is given.
class Manifest {
 public:
  void input(const std::string& p) { inputs_.push_back(p); }
  void output(const std::string& p) { outputs_.push_back(p); }
  void seed(const std::string& k, std::uint64_t v) { seeds_[k] = v; }

  void write(const std::string& command, const CLI::App& sub, const std::set<std::string>& path_opts,
             std::string path) {
    if (path.empty()) {
      if (outputs_.empty()) return;
      path = outputs_.front() + ".manifest.json";
    }
    const auto dir = fs::absolute(fs::path(path)).parent_path();
    auto rel = [&](const std::string& p) {
      return fs::relative(fs::absolute(p), dir).generic_string();
    };
    json opts = json::object();
    for (const auto* o : sub.get_options()) {
      const auto name = o->get_lnames().empty() ? o->get_name() : o->get_lnames().front();
      if (name == "help" || name.empty()) continue;
      std::vector<std::string> vals = o->results();
      if (vals.empty()) {
        if (o->get_default_str().empty()) continue;
        vals = {o->get_default_str()};
      }
      if (path_opts.contains(name)) {
        for (auto& v : vals) v = rel(v);
      }
      opts[name] = vals.size() == 1 ? json(vals[0]) : json(vals);
    }
    json m{{"command", command}, {"format", 1}, {"options", opts}, {"seeds", seeds_}};
    m["config_digest"] = sha256_hex(opts.dump());
    auto files = [&](const std::vector<std::string>& ps) {
      json arr = json::array();
      for (const auto& p : ps) arr.push_back({{"path", rel(p)}, {"sha256", sha256_hex(read_file(p))}});
      return arr;
    };
    m["inputs"] = files(inputs_);
    m["outputs"] = files(outputs_);
    write_file(path, m.dump(2) + '\n');
  }

 private:
  std::vector<std::string> inputs_, outputs_;
  json seeds_ = json::object();
};

struct Command {
  CLI::App* app = nullptr;
  std::set<std::string> path_opts;
  Manifest manifest;
  std::function<void(Command&)> run;

  CLI::Option* path(const std::string& flag, std::string& var, const std::string& desc) {
    auto* o = app->add_option(flag, var, desc);
    path_opts.insert(o->get_lnames().empty() ? o->get_name() : o->get_lnames().front());
    return o;
  }

  void emit(const std::string& p, std::string_view content) {
    if (p.empty()) return;
    if (auto parent = fs::path(p).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_file(p, content);
    manifest.output(p);
  }
};

unsigned env_threads() {
  if (const char* e = std::getenv("POLSENT_THREADS")) {
    try {
      return static_cast<unsigned>(std::max<long long>(1, parse_int(e)));
    } catch (const DataError&) {
      throw UsageError("POLSENT_THREADS must be an integer");
    }
  }
  return 1;
}

PrepConfig prep_config(const std::string& path) {
  return path.empty() ? PrepConfig::defaults() : load_prep_config(path);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in(s);
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// id -> label from a CSV with id and label columns or a labeled JSONL file.
std::map<std::string, Label> read_label_map(const std::string& path) {
  if (!fs::exists(path)) throw DataError("no such file: " + path);
  std::map<std::string, Label> out;
  const auto data = read_file(path);
  if (fs::path(path).extension() == ".csv") {
    auto records = polsent::detail::parse_csv(data);
    if (records.empty()) throw DataError(path + ": empty");
    std::ptrdiff_t id_col = -1, label_col = -1;
    for (std::size_t c = 0; c < records[0].fields.size(); ++c) {
      if (records[0].fields[c] == "id") id_col = static_cast<std::ptrdiff_t>(c);
      if (records[0].fields[c] == "label") label_col = static_cast<std::ptrdiff_t>(c);
    }
    if (id_col < 0 || label_col < 0) mismatch(path, "a label file with id and label columns");
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& f = records[r].fields;
      auto l = parse_label(f.at(static_cast<std::size_t>(label_col)));
      if (!l) throw DataError(path + " line " + std::to_string(records[r].line) + ": label '" +
                              f.at(static_cast<std::size_t>(label_col)) + "' is not positive/negative");
      if (!out.emplace(f.at(static_cast<std::size_t>(id_col)), *l).second) {
        throw DataError(path + ": duplicate id " + f.at(static_cast<std::size_t>(id_col)));
      }
    }
    return out;
  }
  for (const auto& d : read_docs(path).documents) {
    if (!d.label) throw DataError(path + ": document " + d.id + " has no label");
    out[d.id] = *d.label;
  }
  return out;
}

std::string id_list(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? " " : "") + ids[i];
  if (ids.size() > 20) s += " ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised sentiment pipeline for election posts"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option values; flags take precedence");
  unsigned threads = 0;
  bool nondeterministic = false;
  std::string manifest_path;
  app.add_option("--threads", threads, "Worker threads (default: POLSENT_THREADS or 1)");
  app.add_flag("--nondeterministic", nondeterministic,
               "Allow multi-threaded embedding training (not reproducible)");
  app.add_option("--manifest", manifest_path, "Manifest output path");

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& desc) -> Command& {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, desc);
    commands.push_back(std::move(c));
    return *commands.back();
  };
  auto nthreads = [&] { return threads ? threads : env_threads(); };

  // ingest
  {
    auto& c = add("ingest", "Read JSONL/CSV posts, dedupe, language-filter and party-tag");
    static std::string input, format, out, rejects, lexicon, exclusions;
    static bool dedup = false, tag = false;
    static double lang = -1.0;
    c.path("--input,-i", input, "Input file")->required();
    c.app->add_option("--format", format, "jsonl or csv (default: from extension)");
    c.path("--out,-o", out, "Output JSONL")->required();
    c.path("--rejects", rejects, "Rejects report (JSONL of line, reason)");
    c.app->add_flag("--dedupe", dedup, "Drop duplicate texts");
    c.app->add_option("--lang-threshold", lang, "Keep posts with at least this function-word share");
    c.app->add_flag("--tag", tag, "Tag parties and keep single-party posts");
    c.path("--lexicon", lexicon, "Party lexicon TOML (default: built-in)");
    c.path("--exclusions", exclusions, "Tagging exclusion report (JSON)");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      if (!lexicon.empty()) self.manifest.input(lexicon);
      auto r = format.empty() ? ingest(input) : ingest(input, parse_format(format));
      DocumentSet set = r.set;
      const auto n_read = set.size();
      std::size_t dups = 0, lang_dropped = 0;
      if (dedup) {
        auto d = dedupe(set);
        dups = set.size() - d.size();
        set = std::move(d);
      }
      if (lang >= 0.0) {
        auto f = filter_language(set, lang);
        lang_dropped = set.size() - f.size();
        set = std::move(f);
      }
      json excl = json::object();
      if (tag || !lexicon.empty()) {
        auto lex = lexicon.empty() ? PartyLexicon::defaults() : load_lexicon(lexicon);
        auto t = tag_party(set, lex);
        excl = {{"multi_party", t.multi}, {"no_party", t.untagged}};
        set = std::move(t.tagged);
      }
      self.emit(out, serialize(set, Format::JSONL));
      if (!rejects.empty() || !r.rejects.empty()) {
        self.emit(rejects.empty() ? out + ".rejects.jsonl" : rejects, rejects_jsonl(r.rejects));
      }
      if (!exclusions.empty()) self.emit(exclusions, excl.dump(2) + '\n');
      std::cout << "read " << n_read << ", rejected " << r.rejects.size() << ", duplicates " << dups
                << ", language-filtered " << lang_dropped;
      if (excl.contains("multi_party")) {
        std::cout << ", multi-party " << excl["multi_party"].size() << ", no party "
                  << excl["no_party"].size();
      }
      std::cout << ", wrote " << set.size() << "\n";
    };
  }

  // split
  {
    auto& c = add("split", "Sample disjoint train (C) and test (D) sets");
    static std::string input, out_train, out_test, out_rest;
    static std::size_t train = 0, test = 0;
    static std::uint64_t seed = 1;
    static bool stratify = false;
    c.path("--input,-i", input, "Documents")->required();
    c.app->add_option("--train", train, "Train size")->required();
    c.app->add_option("--test", test, "Test size")->required();
    c.app->add_option("--seed", seed, "Seed")->capture_default_str();
    c.app->add_flag("--stratify", stratify, "Stratify by party (or label)");
    c.path("--out-train", out_train, "Train output")->required();
    c.path("--out-test", out_test, "Test output")->required();
    c.path("--out-rest", out_rest, "Remaining documents");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      self.manifest.seed("seed", seed);
      auto s = split(read_docs(input), seed, train, test, stratify);
      self.emit(out_train, serialize(s.train, Format::JSONL));
      self.emit(out_test, serialize(s.test, Format::JSONL));
      self.emit(out_rest, serialize(s.rest, Format::JSONL));
      std::cout << "train " << s.train.size() << ", test " << s.test.size() << ", rest "
                << s.rest.size() << "\n";
    };
  }

  // prep
  {
    auto& c = add("prep", "Normalize, tokenize, remove stop words and stem");
    static std::string input, out, cfg;
    c.path("--input,-i", input, "Documents")->required();
    c.path("--out,-o", out, "Processed JSONL")->required();
    c.path("--prep-config", cfg, "TOML with a [prep] table");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      if (!cfg.empty()) self.manifest.input(cfg);
      auto docs = read_docs(input);
      auto p = run_pipeline(docs.documents, prep_config(cfg), nthreads());
      self.emit(out, processed_jsonl(p));
      std::cout << "processed " << p.size() << " documents\n";
    };
  }

  // vocab
  {
    auto& c = add("vocab", "Build the vocabulary with document frequencies");
    static std::string input, out;
    static std::size_t min_df = 2;
    c.path("--input,-i", input, "Processed JSONL")->required();
    c.path("--out,-o", out, "Vocabulary file")->required();
    c.app->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
    c.run = [&](Command& self) {
      self.manifest.input(input);
      auto v = build_vocab(read_processed(input), min_df);
      self.emit(out, vocab_csv(v));
      std::cout << "vocabulary " << v.size() << " terms over " << v.n_docs() << " documents\n";
    };
  }

  // tfidf
  {
    auto& c = add("tfidf", "Write TF-IDF document vectors as sparse triplets");
    static std::string input, vocab_path, out;
    static std::size_t min_df = 2;
    static bool raw = false;
    c.path("--input,-i", input, "Processed JSONL")->required();
    c.path("--vocab", vocab_path, "Vocabulary file (default: build from input)");
    c.app->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
    c.app->add_flag("--no-normalize", raw, "Keep raw TF-IDF weights");
    c.path("--out,-o", out, "Triplet CSV")->required();
    c.run = [&](Command& self) {
      self.manifest.input(input);
      auto docs = read_processed(input);
      Vocabulary v;
      if (!vocab_path.empty()) {
        self.manifest.input(vocab_path);
        if (sniff_stage(vocab_path) != "vocab") mismatch(vocab_path, "a vocabulary file");
        v = parse_vocab_csv(read_file(vocab_path));
      } else {
        v = build_vocab(docs, min_df);
      }
      auto m = tfidf_matrix(docs, v, !raw, nthreads());
      self.emit(out, triplets_csv(m));
      std::size_t nnz = 0;
      for (const auto& r : m.rows) nnz += r.nnz();
      std::cout << m.size() << " rows, " << m.cols << " columns, " << nnz << " nonzeros\n";
    };
  }

  // embed
  {
    auto& c = add("embed", "Train word2vec embeddings (skip-gram or CBOW)");
    static std::string input, out, text_out, nearest_out, mode = "sg";
    static EmbedConfig ec;
    static std::vector<std::string> queries;
    static std::size_t k = 10;
    c.path("--input,-i", input, "Processed JSONL")->required();
    c.path("--out,-o", out, "Binary model")->required();
    c.path("--text-out", text_out, "Text export (word x1 .. xdim)");
    c.app->add_option("--mode", mode, "sg or cbow")->capture_default_str();
    c.app->add_option("--dim", ec.dim, "Vector size")->capture_default_str();
    c.app->add_option("--window", ec.window, "Context window")->capture_default_str();
    c.app->add_option("--negatives", ec.negatives, "Negative samples")->capture_default_str();
    c.app->add_option("--epochs", ec.epochs, "Epochs")->capture_default_str();
    c.app->add_option("--lr-start", ec.lr_start, "Initial learning rate")->capture_default_str();
    c.app->add_option("--lr-end", ec.lr_end, "Final learning rate")->capture_default_str();
    c.app->add_option("--min-count", ec.min_count, "Minimum term count")->capture_default_str();
    c.app->add_option("--seed", ec.seed, "Seed")->capture_default_str();
    c.app->add_option("--subsample", ec.subsample, "Frequent-word subsampling threshold (0 = off)")
        ->capture_default_str();
    c.app->add_flag("--dynamic-window", ec.dynamic_window, "Shrink windows at random");
    c.app->add_option("--nearest", queries, "Words to report neighbors for");
    c.app->add_option("--k", k, "Neighbors per query")->capture_default_str();
    c.path("--nearest-out", nearest_out, "Neighbor report (JSON)");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      self.manifest.seed("seed", ec.seed);
      ec.mode = parse_embed_mode(mode);
      ec.threads = nondeterministic ? nthreads() : 1;
      auto docs = read_processed(input);
      auto m = train<float>(docs, ec);
      self.emit(out, serialize_model(m));
      self.emit(text_out, export_text(m));
      json nn = json::object();
      for (const auto& q : queries) {
        json arr = json::array();
        for (const auto& n : nearest(m, q, k)) arr.push_back({{"word", n.word}, {"cosine", n.cosine}});
        nn[q] = arr;
        std::cout << q << ":";
        for (const auto& n : arr) std::cout << " " << n["word"].get<std::string>();
        std::cout << "\n";
      }
      if (!nearest_out.empty()) self.emit(nearest_out, nn.dump(2) + '\n');
      std::cout << "trained " << to_string(ec.mode) << " model: " << m.size() << " words x " << m.dim()
                << "\n";
    };
  }

  // annotate
  {
    auto& c = add("annotate", "Label posts interactively, with lexicon hints highlighted");
    static std::string input, hints, out;
    static bool color = false;
    c.path("--input,-i", input, "Unlabeled documents")->required();
    c.path("--hints", hints, "Word list to highlight (one per line)");
    c.path("--out,-o", out, "Labeled output (appended, resumable)")->required();
    c.app->add_flag("--color", color, "Highlight with terminal colors");
    c.run = [&](Command& self) {
      if (!isatty(STDIN_FILENO)) {
        throw UsageError("annotate needs an interactive terminal; to label from a file, add "
                         "\"label\" fields to the JSONL/CSV input and use ingest");
      }
      self.manifest.input(input);
      std::unordered_set<std::string> words;
      if (!hints.empty()) {
        self.manifest.input(hints);
        for (auto& w : read_lines(hints)) words.insert(to_lower_ascii(w));
      }
      AnnotationSession session(read_docs(input).documents, std::move(words), out, color);
      const auto n = session.run(std::cin, std::cout);
      self.manifest.output(out);
      std::cout << "labeled " << n << " this session, " << session.written().size() << " total\n";
    };
  }

  // feature options shared by baseline and propagate
  struct FeatOpts {
    std::string kind = "tfidf";
    std::size_t min_df = 2;
    std::string prep;
    int dim = 100;
    int epochs = 5;
    std::size_t min_count = 2;
    std::uint64_t seed = 1;
  };
  auto add_feat = [](Command& c, FeatOpts& f) {
    c.app->add_option("--features", f.kind, "tfidf, sg or cbow")->capture_default_str();
    c.app->add_option("--min-df", f.min_df, "Minimum document frequency for tfidf")->capture_default_str();
    c.path("--prep-config", f.prep, "TOML with a [prep] table");
    c.app->add_option("--embed-dim", f.dim, "Embedding size for sg/cbow")->capture_default_str();
    c.app->add_option("--embed-epochs", f.epochs, "Embedding epochs")->capture_default_str();
    c.app->add_option("--embed-min-count", f.min_count, "Embedding min count")->capture_default_str();
    c.app->add_option("--embed-seed", f.seed, "Embedding seed")->capture_default_str();
  };
  auto feat_config = [](const FeatOpts& f) {
    FeatureConfig fc;
    fc.kind = parse_feature_kind(f.kind);
    fc.min_df = f.min_df;
    fc.embed.dim = f.dim;
    fc.embed.epochs = f.epochs;
    fc.embed.min_count = f.min_count;
    fc.embed.seed = f.seed;
    return fc;
  };

  // baseline
  {
    auto& c = add("baseline", "Linear SVM with stratified cross-validation");
    static std::string train_path, test_path, model_out, report;
    static FeatOpts f;
    static TrainConfig tc;
    static std::size_t folds = 5;
    static std::uint64_t seed = 1;
    static bool grid = false;
    c.path("--train", train_path, "Documents; labeled ones train, all fit the features")->required();
    c.path("--test", test_path, "Labeled hold-out documents");
    add_feat(c, f);
    c.app->add_option("--lambda", tc.reg_lambda, "Regularization")->capture_default_str();
    c.app->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
    c.app->add_flag("--grid", grid, "Choose lambda from {1e-5, 1e-4, 1e-3, 1e-2} by CV");
    c.app->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
    c.app->add_option("--seed", seed, "Seed")->capture_default_str();
    c.path("--model-out", model_out, "Model JSON");
    c.path("--report", report, "Report JSON")->required();
    c.run = [&](Command& self) {
      self.manifest.input(train_path);
      self.manifest.seed("seed", seed);
      tc.seed = seed;
      auto prep = prep_config(f.prep);
      auto docs = read_docs(train_path);
      auto processed = run_pipeline(docs.documents, prep, nthreads());
      Featurizer feat(processed, feat_config(f));
      std::vector<SparseVector> X;
      std::vector<Label> y;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!docs.documents[i].label) continue;
        X.push_back(feat.row(processed[i]));
        y.push_back(*docs.documents[i].label);
      }
      json rep;
      if (grid) {
        auto g = select_lambda<SparseVector>(X, y, feat.dim(), kLambdaGrid, tc, folds, seed);
        tc.reg_lambda = g.best_lambda;
        json scores = json::array();
        for (auto& [l, cv] : g.scores) scores.push_back({{"lambda", l}, {"cv", cv.to_json()}});
        rep["grid"] = scores;
      }
      auto cv = cross_validate<SparseVector>(X, y, feat.dim(), folds, tc, seed, nthreads());
      rep["lambda"] = tc.reg_lambda;
      rep["train_size"] = X.size();
      rep["cv"] = cv.to_json();
      auto model = train_svm<SparseVector>(X, y, feat.dim(), tc);
      std::cout << "cv macro-F1 " << format_fixed(cv.mean, 4) << " +- " << format_fixed(cv.std, 4) << "\n";
      if (!test_path.empty()) {
        self.manifest.input(test_path);
        auto test = read_docs(test_path);
        std::vector<SparseVector> T;
        std::vector<Label> ty;
        for (const auto& d : test.documents) {
          if (!d.label) throw DataError("test document " + d.id + " has no label");
          T.push_back(feat.row(run_pipeline(d, prep)));
          ty.push_back(*d.label);
        }
        auto pred = predict<SparseVector>(model, T);
        auto cm = confusion(std::span<const Label>(pred), std::span<const Label>(ty));
        rep["test"] = to_json(cm);
        std::cout << render_metrics(cm);
      }
      self.emit(report, rep.dump(2) + '\n');
      if (!model_out.empty()) self.emit(model_out, to_json(model).dump() + '\n');
    };
  }

  // propagate
  {
    auto& c = add("propagate", "One label-propagation pass from the labeled documents");
    static std::string input, out, report, graph_out;
    static FeatOpts f;
    static std::size_t k = 10, max_iter = 1000;
    static double sigma = 0.0, eps = 1e-6, threshold = 0.5;
    static bool cmn = false;
    c.path("--input,-i", input, "Documents; labeled ones are clamped")->required();
    add_feat(c, f);
    c.app->add_option("--k", k, "Neighbors per node")->capture_default_str();
    c.app->add_option("--sigma", sigma, "Kernel width (0 = median heuristic)")->capture_default_str();
    c.app->add_option("--eps", eps, "Convergence tolerance")->capture_default_str();
    c.app->add_option("--max-iter", max_iter, "Sweep limit")->capture_default_str();
    c.app->add_option("--threshold", threshold, "Confidence needed to label")->capture_default_str();
    c.app->add_flag("--class-mass", cmn, "Class-mass normalization");
    c.path("--out,-o", out, "Labels CSV")->required();
    c.path("--report", report, "Report JSON");
    c.path("--graph-out", graph_out, "Graph triplet CSV");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      auto docs = read_docs(input);
      auto processed = run_pipeline(docs.documents, prep_config(f.prep), nthreads());
      Featurizer feat(processed, feat_config(f));
      auto rows = feat.rows(processed, nthreads());
      auto g = build_graph(std::span<const SparseVector>(rows), k,
                           sigma > 0 ? std::optional<double>(sigma) : std::nullopt, nthreads());
      auto seeds = LabelDistribution::unlabeled(docs.size());
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (docs.documents[i].label) seeds.clamp(i, *docs.documents[i].label);
      }
      auto res = propagate(g, seeds, {eps, max_iter, cmn, nthreads()});
      auto dec = harden(res.dist, threshold);
      std::string csv = "id,party,label,confidence,iteration\n";
      for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto& d = docs.documents[i];
        const auto& y = res.dist.Y[i];
        csv += d.id + ',' + (d.party ? std::string(to_string(*d.party)) : "") + ',' +
               std::string(to_string(dec[i])) + ',' + format_fixed(std::max(y[0], y[1]), 6) + ',' +
               (seeds.clamped[i] ? "0" : "1") + '\n';
      }
      self.emit(out, csv);
      auto rep = res.report();
      rep["sigma"] = g.sigma;
      rep["edges"] = g.edges();
      if (!report.empty()) self.emit(report, rep.dump(2) + '\n');
      if (!graph_out.empty()) self.emit(graph_out, graph_csv(g));
      std::cout << "iterations " << res.iterations << ", final delta " << res.final_delta
                << (res.converged ? ", converged" : ", NOT converged") << "\n";
      if (res.missing_class) std::cerr << "warning: some class has no seed\n";
    };
  }

  // selflabel
  {
    auto& c = add("selflabel", "Batch self-labeling with a hold-out guard");
    static std::string corpus, holdout, labels_out, audit_out, labeled_out, report;
    static FeatOpts f;
    static std::vector<std::size_t> batches = {1000, 10000, 20000};
    static bool no_stratify = false, soft = false;
    static double guard = 0.02, sigma = 0.0, eps = 1e-6, threshold = 0.5;
    static std::size_t k = 10, max_iter = 1000, inject_flip = 0;
    static std::uint64_t seed = 1;
    c.path("--corpus", corpus, "Documents; labeled ones seed the pool, the rest get labeled")->required();
    c.path("--holdout", holdout, "Labeled hold-out documents")->required();
    add_feat(c, f);
    c.app->add_option("--batches", batches, "Batch totals per iteration")->delimiter(',')->capture_default_str();
    c.app->add_flag("--no-stratify", no_stratify, "Draw batches without party stratification");
    c.app->add_option("--guard-drop", guard, "Reject a batch if hold-out macro-F1 falls by more")
        ->capture_default_str();
    c.app->add_option("--seed", seed, "Seed")->capture_default_str();
    c.app->add_option("--k", k, "Neighbors per node")->capture_default_str();
    c.app->add_option("--sigma", sigma, "Kernel width (0 = median heuristic)")->capture_default_str();
    c.app->add_option("--eps", eps, "Convergence tolerance")->capture_default_str();
    c.app->add_option("--max-iter", max_iter, "Sweep limit")->capture_default_str();
    c.app->add_option("--threshold", threshold, "Confidence needed to accept a label")->capture_default_str();
    c.app->add_flag("--soft-seeds", soft, "Keep pseudo-labels soft in later graphs");
    c.app->add_option("--inject-flip", inject_flip, "Flip the labels of this iteration's batch")
        ->group("");
    c.path("--labels-out", labels_out, "Labels CSV")->required();
    c.path("--audit-out", audit_out, "Audit log JSONL")->required();
    c.path("--labeled-out", labeled_out, "Labeled documents JSONL");
    c.path("--report", report, "Report JSON");
    c.run = [&](Command& self) {
      self.manifest.input(corpus);
      self.manifest.input(holdout);
      self.manifest.seed("seed", seed);
      auto docs = read_docs(corpus);
      auto hold = read_docs(holdout);
      DocumentSet seeds{{}, Role::C}, pool{{}, Role::B};
      for (auto& d : docs.documents) (d.label ? seeds : pool).documents.push_back(d);
      SelfLabelConfig cfg;
      cfg.schedule.batch_sizes = batches;
      cfg.schedule.stratify_by_party = !no_stratify;
      cfg.schedule.guard_drop = guard;
      cfg.schedule.seed = seed;
      cfg.prep = prep_config(f.prep);
      cfg.features = feat_config(f);
      cfg.k = k;
      if (sigma > 0) cfg.sigma = sigma;
      cfg.propagation.eps = eps;
      cfg.propagation.max_iter = max_iter;
      cfg.threshold = threshold;
      cfg.soft_seeds = soft;
      cfg.threads = nthreads();
      if (inject_flip > 0) {
        cfg.corrupt_batch = [](std::size_t it, std::vector<Decision>& d) {
          if (it != inject_flip) return;
          for (auto& x : d) {
            if (x == Decision::Positive) x = Decision::Negative;
            else if (x == Decision::Negative) x = Decision::Positive;
          }
        };
      }
      auto res = run_schedule(seeds, pool, hold, cfg);
      self.emit(labels_out, res.labels_csv());
      self.emit(audit_out, res.audit.jsonl());
      if (!labeled_out.empty()) self.emit(labeled_out, serialize(res.labeled, Format::JSONL));
      json rep{{"halted", res.halted},
               {"seeds", seeds.size()},
               {"machine_labeled", res.labels.size()},
               {"remaining", res.remaining.size()},
               {"holdout", res.final_score ? res.final_score->to_json() : json(nullptr)}};
      if (!report.empty()) self.emit(report, rep.dump(2) + '\n');
      for (const auto& r : res.audit.records()) {
        std::cout << (r.final_pass ? "final" : "iteration " + std::to_string(r.iteration)) << ": batch "
                  << r.batch_ids.size() << ", holdout macro-F1 "
                  << (r.after ? format_fixed(r.after->macro_f1, 4) : "-")
                  << (r.accepted ? "" : "  REJECTED: " + r.note) << "\n";
      }
      if (res.halted) {
        self.manifest.write("selflabel", *self.app, self.path_opts, manifest_path);
        throw GuardHalt("guard halted the schedule; pre-batch state kept");
      }
    };
  }

  // evaluate
  {
    auto& c = add("evaluate", "Score predicted labels against truth");
    static std::string pred, truth, report;
    c.path("--pred", pred, "Predicted labels (CSV with id,label or JSONL)")->required();
    c.path("--truth", truth, "True labels (CSV with id,label or JSONL)")->required();
    c.path("--report", report, "Report JSON");
    c.run = [&](Command& self) {
      self.manifest.input(pred);
      self.manifest.input(truth);
      auto p = read_label_map(pred);
      auto t = read_label_map(truth);
      std::vector<std::string> only_pred, only_truth;
      for (auto& [id, l] : p) {
        if (!t.contains(id)) only_pred.push_back(id);
      }
      for (auto& [id, l] : t) {
        if (!p.contains(id)) only_truth.push_back(id);
      }
      if (!only_pred.empty() || !only_truth.empty()) {
        std::string msg = "id sets differ.";
        if (!only_pred.empty()) msg += " Only in predictions: " + id_list(only_pred) + ".";
        if (!only_truth.empty()) msg += " Only in truth: " + id_list(only_truth) + ".";
        throw DataError(msg);
      }
      std::vector<Label> pv, tv;
      for (auto& [id, l] : t) {
        tv.push_back(l);
        pv.push_back(p.at(id));
      }
      auto cm = confusion(std::span<const Label>(pv), std::span<const Label>(tv));
      std::cout << render_metrics(cm);
      std::cout << "macro-F1 " << format_fixed(macro_f1(cm), 4) << "\n";
      if (!report.empty()) self.emit(report, to_json(cm).dump(2) + '\n');
    };
  }

  // topics
  {
    auto& c = add("topics", "LDA topics of each party's negative posts");
    static std::string input, out, svg_dir, prep;
    static std::size_t K = 5, iters = 1000, top = 10;
    static double alpha = 0.0, beta = 0.01;
    static std::uint64_t seed = 1;
    c.path("--input,-i", input, "Labeled, party-tagged documents")->required();
    c.path("--out,-o", out, "Topic report JSON")->required();
    c.path("--svg-dir", svg_dir, "Write one bar-chart SVG per party here");
    c.path("--prep-config", prep, "TOML with a [prep] table");
    c.app->add_option("--topics", K, "Topics per party")->capture_default_str();
    c.app->add_option("--alpha", alpha, "Document-topic prior (0 = 50/K)")->capture_default_str();
    c.app->add_option("--beta", beta, "Topic-word prior")->capture_default_str();
    c.app->add_option("--iters", iters, "Gibbs sweeps")->capture_default_str();
    c.app->add_option("--top", top, "Words per topic")->capture_default_str();
    c.app->add_option("--seed", seed, "Seed")->capture_default_str();
    c.run = [&](Command& self) {
      self.manifest.input(input);
      self.manifest.seed("seed", seed);
      auto p = LdaParams::with_topics(K);
      if (alpha > 0) p.alpha = alpha;
      p.beta = beta;
      p.iters = iters;
      p.seed = seed;
      auto res = analyze_negative(read_docs(input), prep_config(prep), p, top, 4, 0);
      for (auto& r : res) r.grams.entries.clear();
      json j = to_json(res);
      for (auto& [party, v] : j.items()) v.erase("ngrams");
      self.emit(out, j.dump(2) + '\n');
      for (const auto& r : res) {
        std::cout << to_string(r.party) << " (" << r.documents << " negative posts)\n";
        for (std::size_t t = 0; t < r.topics.size(); ++t) {
          std::cout << "  topic " << t + 1 << ":";
          for (const auto& w : r.topics[t]) std::cout << " " << w.word;
          std::cout << "\n";
        }
        if (!svg_dir.empty()) {
          self.emit((fs::path(svg_dir) / (std::string(to_string(r.party)) + ".svg")).string(),
                    topics_svg(r.topics, std::string(to_string(r.party))));
        }
      }
    };
  }

  // ngrams
  {
    auto& c = add("ngrams", "Most frequent n-grams in negative posts");
    static std::string input, out, party, prep;
    static std::size_t n = 4, top = 20;
    static bool all = false;
    c.path("--input,-i", input, "Labeled documents")->required();
    c.path("--out,-o", out, "CSV of rank, ngram, count")->required();
    c.path("--prep-config", prep, "TOML with a [prep] table");
    c.app->add_option("--n", n, "Gram length")->capture_default_str();
    c.app->add_option("--top", top, "Rows to keep (0 = all)")->capture_default_str();
    c.app->add_option("--party", party, "Only this party");
    c.app->add_flag("--all-labels", all, "Use every post, not only negative ones");
    c.run = [&](Command& self) {
      self.manifest.input(input);
      auto cfg = prep_config(prep);
      std::optional<Party> only;
      if (!party.empty()) {
        only = parse_party(party);
        if (!only) throw UsageError("unknown party " + party);
      }
      std::vector<ProcessedDoc> docs;
      for (const auto& d : read_docs(input).documents) {
        if (!all && d.label != Label::Negative) continue;
        if (only && d.party != only) continue;
        docs.push_back(run_pipeline(d, cfg));
      }
      auto t = ngrams(docs, n, top, nthreads());
      self.emit(out, t.csv());
      for (std::size_t i = 0; i < t.entries.size() && i < 10; ++i) {
        std::cout << t.entries[i].second << "  " << t.entries[i].first << "\n";
      }
    };
  }

  // report
  {
    auto& c = add("report", "Per-party sentiment table");
    static std::string input, counts, out, json_out;
    c.path("--input,-i", input, "Labeled, party-tagged documents");
    c.path("--counts", counts, "CSV of party,total,positive instead of documents");
    c.path("--out,-o", out, "Text table");
    c.path("--json-out", json_out, "JSON table");
    c.run = [&](Command& self) {
      PartySentimentTable t;
      if (!counts.empty() == !input.empty()) throw UsageError("give exactly one of --input or --counts");
      if (!counts.empty()) {
        self.manifest.input(counts);
        auto recs = polsent::detail::parse_csv(read_file(counts));
        std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> rows;
        for (std::size_t r = 1; r < recs.size(); ++r) {
          const auto& fld = recs[r].fields;
          if (fld.size() != 3) throw DataError(counts + " line " + std::to_string(recs[r].line) + ": expected party,total,positive");
          rows.push_back({fld[0], {static_cast<std::size_t>(parse_int(trim(fld[1]))),
                                   static_cast<std::size_t>(parse_int(trim(fld[2])))}});
        }
        t = sentiment_table(rows);
      } else {
        self.manifest.input(input);
        t = aggregate_sentiment(read_docs(input));
      }
      const auto text = render_table(t);
      std::cout << text;
      self.emit(out, text);
      self.emit(json_out, to_json(t).dump(2) + '\n');
    };
  }

  // synth
  {
    auto& c = add("synth", "Generate a labeled synthetic corpus");
    static std::string out, truth_out, holdout_out, lexicon_out;
    static std::size_t n_docs = 2000, holdout_docs = 0, min_len = 8, max_len = 20;
    static double rate = 0.6, label_fraction = 0.05, positive_fraction = 0.5;
    static std::uint64_t seed = 1;
    c.app->add_option("--n-docs", n_docs, "Corpus size")->capture_default_str();
    c.app->add_option("--rate", rate, "Share of sentiment words")->capture_default_str();
    c.app->add_option("--label-fraction", label_fraction, "Share of visible labels")->capture_default_str();
    c.app->add_option("--positive-fraction", positive_fraction, "Share of positive documents")->capture_default_str();
    c.app->add_option("--holdout-docs", holdout_docs, "Extra labeled hold-out documents")->capture_default_str();
    c.app->add_option("--min-len", min_len, "Shortest document")->capture_default_str();
    c.app->add_option("--max-len", max_len, "Longest document")->capture_default_str();
    c.app->add_option("--seed", seed, "Seed")->capture_default_str();
    c.path("--out,-o", out, "Corpus JSONL")->required();
    c.path("--truth-out", truth_out, "CSV of id,label for every corpus document");
    c.path("--holdout-out", holdout_out, "Hold-out JSONL");
    c.path("--lexicon-out", lexicon_out, "Generated lexicons (JSON)");
    c.run = [&](Command& self) {
      self.manifest.seed("seed", seed);
      auto spec = GenSpec::defaults(seed);
      spec.n_docs = n_docs;
      spec.sentiment_word_rate = rate;
      spec.label_fraction = label_fraction;
      spec.positive_fraction = positive_fraction;
      spec.holdout_docs = holdout_docs;
      spec.doc_length = {min_len, max_len};
      auto g = generate(spec);
      self.emit(out, serialize(g.corpus, Format::JSONL));
      self.emit(truth_out, g.truth_csv());
      if (!holdout_out.empty()) self.emit(holdout_out, serialize(g.holdout, Format::JSONL));
      if (!lexicon_out.empty()) {
        self.emit(lexicon_out, json{{"positive", spec.pos_lexicon},
                                    {"negative", spec.neg_lexicon},
                                    {"noise", spec.noise_lexicon}}.dump(2) + '\n');
      }
      std::cout << "generated " << g.corpus.size() << " documents (" << g.visible_count()
                << " labeled) and " << g.holdout.size() << " hold-out documents\n";
    };
  }

  // verify
  {
    auto& c = add("verify", "Recompute a manifest's digests and report drift");
    static std::string path;
    c.path("manifest", path, "Manifest JSON")->required();
    c.run = [&](Command&) {
      json m;
      try {
        m = json::parse(read_file(path));
      } catch (const json::parse_error& e) {
        throw DataError(path + ": " + e.what());
      }
      const auto dir = fs::absolute(fs::path(path)).parent_path();
      std::size_t bad = 0, checked = 0;
      for (const char* section : {"inputs", "outputs"}) {
        for (const auto& f : m.value(section, json::array())) {
          const auto p = (dir / f.at("path").get<std::string>()).lexically_normal();
          ++checked;
          if (!fs::exists(p)) {
            std::cout << "MISSING " << p.string() << "\n";
            ++bad;
          } else if (sha256_hex(read_file(p.string())) != f.at("sha256").get<std::string>()) {
            std::cout << "CHANGED " << p.string() << "\n";
            ++bad;
          }
        }
      }
      if (bad) throw DataError(std::to_string(bad) + " of " + std::to_string(checked) + " files drifted");
      std::cout << "OK " << checked << " files match\n";
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  try {
    for (auto& c : commands) {
      if (c->app->parsed()) {
        c->run(*c);
        if (c->app->get_name() != "verify") {
          c->manifest.write(c->app->get_name(), *c->app, c->path_opts, manifest_path);
        }
      }
    }
  } catch (const GuardHalt& e) {
    std::cerr << "polsent: " << e.what() << "\n";
    return kExitGuard;
  } catch (const UsageError& e) {
    std::cerr << "polsent: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "polsent: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "polsent: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
