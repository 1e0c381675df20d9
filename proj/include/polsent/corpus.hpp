#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "polsent/resources.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

enum class Format { JSONL, CSV };

inline Format parse_format(std::string_view s) {
  const auto l = to_lower_ascii(s);
  if (l == "jsonl" || l == "json") return Format::JSONL;
  if (l == "csv") return Format::CSV;
  throw UsageError("unknown format: " + std::string(s));
}

inline Format format_from_path(const std::string& path) {
  const auto ext = to_lower_ascii(std::filesystem::path(path).extension().string());
  if (ext == ".csv") return Format::CSV;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return Format::JSONL;
  throw UsageError("cannot infer format from extension: " + path);
}

struct Reject {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  DocumentSet set;
  std::vector<Reject> rejects;
};

inline std::string rejects_jsonl(const std::vector<Reject>& rejects) {
  std::string out;
  for (const auto& r : rejects) {
    out += nlohmann::json{{"line", r.line}, {"reason", r.reason}}.dump();
    out += '\n';
  }
  return out;
}

namespace detail {

// RFC 4180 records; quoted fields may span lines. Each record carries the
// line it started on.
struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};

inline std::vector<CsvRecord> parse_csv(std::string_view data) {
  std::vector<CsvRecord> out;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < data.size()) {
    CsvRecord rec{line, {}};
    std::string field;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (i >= data.size()) {
        if (quoted) throw DataError("unterminated quote in CSV record at line " +
                                    std::to_string(rec.line));
        rec.fields.push_back(std::move(field));
        break;
      }
      const char c = data[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < data.size() && data[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            quoted = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
        ++i;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        ++i;
      } else if (c == '\r' || c == '\n') {
        if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
        ++i;
        ++line;
        rec.fields.push_back(std::move(field));
        done = true;
      } else {
        field += c;
        ++i;
      }
    }
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct RawRecord {
  std::optional<std::string> id, text, party, label, provenance, source;
};

inline void to_document(const RawRecord& r, std::size_t line, const std::string& path,
                        std::unordered_set<std::string>& seen, IngestResult& res) {
  auto reject = [&](std::string why) { res.rejects.push_back({line, std::move(why)}); };
  if (!r.id || r.id->empty()) return reject("missing id");
  if (!r.text || trim(*r.text).empty()) return reject("missing text");
  if (seen.contains(*r.id)) return reject("duplicate id " + *r.id);
  Document d;
  d.id = *r.id;
  d.text = *r.text;
  if (r.party && !r.party->empty()) {
    d.party = parse_party(*r.party);
    if (!d.party) return reject("unknown party '" + *r.party + "'");
  }
  if (r.label && !r.label->empty()) {
    d.label = parse_label(*r.label);
    if (!d.label) return reject("unknown label '" + *r.label + "'");
  }
  if (r.provenance && !r.provenance->empty()) {
    auto p = parse_provenance(*r.provenance);
    if (!p) return reject("unknown provenance '" + *r.provenance + "'");
    d.provenance = *p;
  } else if (d.label) {
    d.provenance = Provenance::Manual;
  }
  if (d.label && d.provenance == Provenance::None) {
    return reject("labeled record with provenance none");
  }
  if (!d.label && d.provenance != Provenance::None) {
    return reject("provenance without label");
  }
  d.source = r.source ? *r.source : path;
  seen.insert(d.id);
  res.set.documents.push_back(std::move(d));
}

}  // namespace detail

// Reads one record per line (JSONL) or per CSV row. Bad records are listed
// in rejects with their 1-based line number; the header is line 1 for CSV.
inline IngestResult ingest_string(std::string_view data, Format format,
                                  const std::string& source = "") {
  IngestResult res;
  std::unordered_set<std::string> seen;
  if (format == Format::JSONL) {
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos <= data.size()) {
      auto nl = data.find('\n', pos);
      if (nl == std::string_view::npos) nl = data.size();
      std::string_view raw = data.substr(pos, nl - pos);
      pos = nl + 1;
      ++line;
      if (trim(raw).empty()) {
        if (nl == data.size()) break;
        continue;
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::parse_error&) {
        res.rejects.push_back({line, "invalid JSON"});
        continue;
      }
      if (!j.is_object()) {
        res.rejects.push_back({line, "record is not an object"});
        continue;
      }
      detail::RawRecord r;
      bool bad = false;
      auto field = [&](const char* key, std::optional<std::string>& dst) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return;
        if (!it->is_string()) {
          bad = true;
          return;
        }
        dst = it->get<std::string>();
      };
      field("id", r.id);
      field("text", r.text);
      field("party", r.party);
      field("label", r.label);
      field("provenance", r.provenance);
      field("source", r.source);
      if (bad) {
        res.rejects.push_back({line, "non-string field"});
        continue;
      }
      detail::to_document(r, line, source, seen, res);
      if (nl == data.size()) break;
    }
  } else {
    auto records = detail::parse_csv(data);
    if (records.empty()) throw DataError("CSV input has no header row");
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < records[0].fields.size(); ++c) {
      col[to_lower_ascii(trim(records[0].fields[c]))] = c;
    }
    if (!col.contains("id") || !col.contains("text")) {
      throw DataError("CSV header must contain id and text columns");
    }
    for (std::size_t k = 1; k < records.size(); ++k) {
      const auto& rec = records[k];
      if (rec.fields.size() != records[0].fields.size()) {
        res.rejects.push_back({rec.line, "expected " + std::to_string(records[0].fields.size()) +
                                             " fields, got " + std::to_string(rec.fields.size())});
        continue;
      }
      detail::RawRecord r;
      auto get = [&](const char* key, std::optional<std::string>& dst) {
        if (auto it = col.find(key); it != col.end()) dst = rec.fields[it->second];
      };
      get("id", r.id);
      get("text", r.text);
      get("party", r.party);
      get("label", r.label);
      get("provenance", r.provenance);
      get("source", r.source);
      detail::to_document(r, rec.line, source, seen, res);
    }
  }
  return res;
}

inline IngestResult ingest(const std::string& path, Format format) {
  return ingest_string(read_file(path), format, path);
}

inline IngestResult ingest(const std::string& path) {
  return ingest(path, format_from_path(path));
}

inline nlohmann::json to_json(const Document& d) {
  nlohmann::json j{{"id", d.id}, {"text", d.text}};
  if (d.party) j["party"] = to_string(*d.party);
  if (d.label) j["label"] = to_string(*d.label);
  if (d.provenance != Provenance::None) j["provenance"] = to_string(d.provenance);
  if (!d.source.empty()) j["source"] = d.source;
  return j;
}

inline std::string serialize(const DocumentSet& set, Format format) {
  std::string out;
  if (format == Format::JSONL) {
    for (const auto& d : set.documents) {
      out += to_json(d).dump();
      out += '\n';
    }
    return out;
  }
  out = "id,text,party,label,provenance,source\n";
  for (const auto& d : set.documents) {
    out += detail::csv_field(d.id) + ',' + detail::csv_field(d.text) + ',' +
           (d.party ? std::string(to_string(*d.party)) : "") + ',' +
           (d.label ? std::string(to_string(*d.label)) : "") + ',' +
           (d.provenance != Provenance::None ? std::string(to_string(d.provenance)) : "") +
           ',' + detail::csv_field(d.source) + '\n';
  }
  return out;
}

inline void save(const DocumentSet& set, const std::string& path, Format format) {
  write_file(path, serialize(set, format));
}

inline DocumentSet dedupe(const DocumentSet& set) {
  DocumentSet out{{}, set.role};
  std::unordered_set<std::string_view> seen;
  for (const auto& d : set.documents) {
    if (seen.insert(trim(d.text)).second) out.documents.push_back(d);
  }
  return out;
}

namespace detail {

inline std::vector<std::string> word_tokens(std::string_view text, bool underscore) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    char c = (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || (underscore && c == '_') ||
        (!underscore && c == '\'')) {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline double function_word_ratio(std::string_view text,
                                  const std::unordered_set<std::string>& words) {
  const auto toks = detail::word_tokens(text, false);
  if (toks.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : toks) hits += words.contains(t);
  return static_cast<double>(hits) / static_cast<double>(toks.size());
}

inline std::unordered_set<std::string> default_function_words() {
  std::unordered_set<std::string> s;
  for (auto w : resources::kStopwords) s.emplace(w);
  return s;
}

// Keeps documents whose share of function-word tokens reaches threshold.
inline DocumentSet filter_language(const DocumentSet& set, double threshold,
                                   const std::unordered_set<std::string>& words) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw UsageError("language threshold must lie in [0, 1]");
  }
  DocumentSet out{{}, set.role};
  for (const auto& d : set.documents) {
    if (detail::word_tokens(d.text, false).empty()) continue;
    if (function_word_ratio(d.text, words) >= threshold) out.documents.push_back(d);
  }
  return out;
}

inline DocumentSet filter_language(const DocumentSet& set, double threshold = 0.15) {
  return filter_language(set, threshold, default_function_words());
}

struct PartyLexicon {
  std::map<Party, std::vector<std::string>> keywords;
  // Keywords at least this long also match inside a token or across two
  // adjacent tokens.
  std::size_t substring_min = 5;

  static PartyLexicon defaults() {
    PartyLexicon l;
    l.keywords[Party::ANC] = {"anc", "myanc", "ancyl", "ancwl", "ramaphosa", "cyrilramaphosa",
                              "anc_sa", "voteanc"};
    l.keywords[Party::DA] = {"da", "daofficial", "da_news", "steenhuisen", "jsteenhuisen",
                             "voteda", "dawc"};
    l.keywords[Party::EFF] = {"eff", "effsouthafrica", "malema", "julius_s_malema",
                              "juliusmalema", "effmustrise", "effsa", "voteeff"};
    l.keywords[Party::ActionSA] = {"actionsa", "actionsa_za", "mashaba", "hermanmashaba",
                                   "voteactionsa"};
    return l;
  }

  void validate() const {
    std::map<std::string, Party> owner;
    for (const auto& [p, words] : keywords) {
      if (p == Party::Other) throw DataError("lexicon cannot list keywords for Other");
      for (const auto& w : words) {
        if (w.empty() || w != to_lower_ascii(w)) {
          throw DataError("lexicon keywords must be non-empty lowercase: '" + w + "'");
        }
        auto [it, fresh] = owner.emplace(w, p);
        if (!fresh && it->second != p) {
          throw DataError("keyword '" + w + "' listed for both " +
                          std::string(to_string(it->second)) + " and " +
                          std::string(to_string(p)));
        }
      }
    }
  }
};

// [parties] table of party -> keyword arrays, plus optional substring_min.
inline PartyLexicon load_lexicon(const std::string& path) {
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw DataError("cannot parse " + path + ": " + std::string(e.description()));
  }
  PartyLexicon lex;
  if (auto m = root["substring_min"].value<int64_t>()) {
    if (*m < 1) throw DataError("substring_min must be >= 1");
    lex.substring_min = static_cast<std::size_t>(*m);
  }
  const auto* parties = root["parties"].as_table();
  if (!parties) throw DataError(path + ": missing [parties] table");
  for (const auto& [key, node] : *parties) {
    auto p = parse_party(key.str());
    if (!p) throw DataError(path + ": unknown party '" + std::string(key.str()) + "'");
    const auto* arr = node.as_array();
    if (!arr) throw DataError(path + ": party entries must be arrays");
    auto& words = lex.keywords[*p];
    for (const auto& e : *arr) {
      auto w = e.value<std::string>();
      if (!w) throw DataError(path + ": keywords must be strings");
      words.push_back(*w);
    }
  }
  lex.validate();
  return lex;
}

// Parties whose keywords occur in text (lowercased [a-z0-9_] tokens).
inline std::set<Party> matched_parties(std::string_view text, const PartyLexicon& lex) {
  const auto toks = detail::word_tokens(text, true);
  std::unordered_set<std::string> exact(toks.begin(), toks.end());
  std::vector<std::string> joined;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) joined.push_back(toks[i] + toks[i + 1]);
  std::set<Party> out;
  for (const auto& [p, words] : lex.keywords) {
    for (const auto& w : words) {
      bool hit = exact.contains(w);
      if (!hit && w.size() >= lex.substring_min) {
        hit = std::any_of(toks.begin(), toks.end(),
                          [&](const std::string& t) { return t.find(w) != std::string::npos; }) ||
              std::any_of(joined.begin(), joined.end(),
                          [&](const std::string& t) { return t == w; });
      }
      if (hit) {
        out.insert(p);
        break;
      }
    }
  }
  return out;
}

struct TagResult {
  DocumentSet tagged;                 // role B: exactly one main party
  std::vector<std::string> multi;     // ids matching two or more parties
  std::vector<std::string> untagged;  // ids matching none (party Other)
};

inline TagResult tag_party(const DocumentSet& set, const PartyLexicon& lex) {
  lex.validate();
  TagResult res;
  res.tagged.role = Role::B;
  for (const auto& d : set.documents) {
    const auto parties = matched_parties(d.text, lex);
    if (parties.size() == 1) {
      Document t = d;
      t.party = *parties.begin();
      res.tagged.documents.push_back(std::move(t));
    } else if (parties.empty()) {
      res.untagged.push_back(d.id);
    } else {
      res.multi.push_back(d.id);
    }
  }
  return res;
}

struct SplitResult {
  DocumentSet train;  // role C
  DocumentSet test;   // role D
  DocumentSet rest;
};

// Seeded sampling without replacement. With stratify, each part takes its
// share from every party (or label when no party is set) by largest
// remainder, so the mix follows the population.
inline SplitResult split(const DocumentSet& set, std::uint64_t seed, std::size_t train_size,
                         std::size_t test_size, bool stratify = false) {
  const std::size_t n = set.size();
  if (train_size + test_size > n) {
    throw UsageError("split sizes " + std::to_string(train_size) + " + " +
                     std::to_string(test_size) + " exceed population " + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<int> part(n, 2);
  if (!stratify) {
    for (std::size_t k = 0; k < train_size; ++k) part[order[k]] = 0;
    for (std::size_t k = train_size; k < train_size + test_size; ++k) part[order[k]] = 1;
  } else {
    auto key = [&](const Document& d) -> std::string {
      if (d.party) return "p" + std::string(to_string(*d.party));
      if (d.label) return "l" + std::string(to_string(*d.label));
      return "-";
    };
    std::map<std::string, std::vector<std::size_t>> groups;
    for (auto i : order) groups[key(set.documents[i])].push_back(i);
    auto allot = [&](std::size_t want, std::map<std::string, std::size_t>& avail) {
      std::map<std::string, std::size_t> take;
      std::size_t total = 0;
      for (auto& [k, v] : avail) total += v;
      std::vector<std::pair<double, std::string>> rem;
      std::size_t given = 0;
      for (auto& [k, v] : avail) {
        const double exact = total ? static_cast<double>(want) * static_cast<double>(v) /
                                         static_cast<double>(total)
                                   : 0.0;
        take[k] = static_cast<std::size_t>(exact);
        given += take[k];
        rem.emplace_back(exact - static_cast<double>(take[k]), k);
      }
      std::stable_sort(rem.begin(), rem.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t r = 0; given < want; r = (r + 1) % rem.size()) {
        auto& k = rem[r].second;
        if (take[k] < avail[k]) {
          ++take[k];
          ++given;
        }
      }
      for (auto& [k, v] : take) avail[k] -= v;
      return take;
    };
    std::map<std::string, std::size_t> avail;
    for (auto& [k, v] : groups) avail[k] = v.size();
    auto tr = allot(train_size, avail);
    auto te = allot(test_size, avail);
    for (auto& [k, idx] : groups) {
      std::size_t c = 0;
      for (std::size_t t = 0; t < tr[k]; ++t) part[idx[c++]] = 0;
      for (std::size_t t = 0; t < te[k]; ++t) part[idx[c++]] = 1;
    }
  }
  SplitResult res{{{}, Role::C}, {{}, Role::D}, {{}, set.role}};
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = part[i] == 0 ? res.train : part[i] == 1 ? res.test : res.rest;
    dst.documents.push_back(set.documents[i]);
  }
  return res;
}

// Checks the role invariants: ids unique, C/D fully labeled, B tagged with a
// main party.
inline void check_roles(const DocumentSet& set) {
  std::unordered_set<std::string> ids;
  for (const auto& d : set.documents) {
    if (!ids.insert(d.id).second) throw DataError("duplicate id " + d.id);
    if (d.text.empty()) throw DataError("empty text for id " + d.id);
    if ((set.role == Role::C || set.role == Role::D) && !d.label) {
      throw DataError("unlabeled document " + d.id + " in role " + std::string(to_string(set.role)));
    }
    if (set.role == Role::B && (!d.party || *d.party == Party::Other)) {
      throw DataError("document " + d.id + " in role B lacks a main party");
    }
  }
}

}  // namespace polsent
