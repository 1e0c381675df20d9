#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "polsent/resources.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

struct PrepConfig {
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, std::string> contractions;
  std::vector<std::pair<std::string, std::string>> compound_joins;
  int max_repeat = 2;
  bool stem = true;

  // Built-in stop list, contraction table and the ("action","sa") join.
  static PrepConfig defaults() {
    PrepConfig c;
    for (auto w : resources::kStopwords) c.stopwords.emplace(w);
    for (auto [k, v] : resources::kContractions) c.contractions.emplace(k, v);
    c.compound_joins.emplace_back("action", "sa");
    return c;
  }

  void validate() const {
    if (max_repeat < 1) throw UsageError("max_repeat must be >= 1");
    for (const auto& [a, b] : compound_joins) {
      if (a != to_lower_ascii(a) || b != to_lower_ascii(b)) {
        throw UsageError("compound join keys must be lowercase: " + a + " " + b);
      }
    }
  }
};

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
  auto lines = read_lines(path);
  return {lines.begin(), lines.end()};
}

inline std::unordered_map<std::string, std::string> load_contractions(
    const std::string& path) {
  std::unordered_map<std::string, std::string> out;
  for (const auto& line : read_lines(path)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DataError("bad contraction line in " + path + ": " + line);
    }
    out[to_lower_ascii(trim(std::string_view(line).substr(0, eq)))] =
        to_lower_ascii(trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

// Reads [prep] settings from a TOML file. Resource paths are resolved
// relative to the file; anything missing keeps its built-in default.
//
//   [prep]
//   stopwords = "stopwords.txt"
//   contractions = "contractions.txt"
//   extra_stopwords = ["rt"]
//   compound_joins = [["action", "sa"]]
//   max_repeat = 2
//   stem = true
inline PrepConfig load_prep_config(const std::string& path) {
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw DataError("cannot parse " + path + ": " + std::string(e.description()));
  }
  PrepConfig c = PrepConfig::defaults();
  const auto* prep = root["prep"].as_table();
  if (!prep) return c;
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).string();
  };
  if (auto s = (*prep)["stopwords"].value<std::string>()) {
    c.stopwords = load_stopwords(resolve(*s));
  }
  if (auto s = (*prep)["contractions"].value<std::string>()) {
    c.contractions = load_contractions(resolve(*s));
  }
  if (const auto* extra = (*prep)["extra_stopwords"].as_array()) {
    for (const auto& e : *extra) {
      if (auto w = e.value<std::string>()) c.stopwords.insert(to_lower_ascii(*w));
    }
  }
  if (const auto* joins = (*prep)["compound_joins"].as_array()) {
    c.compound_joins.clear();
    for (const auto& j : *joins) {
      const auto* pair = j.as_array();
      if (!pair || pair->size() != 2) {
        throw DataError("compound_joins entries must be [first, second]");
      }
      auto a = (*pair)[0].value<std::string>();
      auto b = (*pair)[1].value<std::string>();
      if (!a || !b) throw DataError("compound_joins entries must be strings");
      c.compound_joins.emplace_back(*a, *b);
    }
  }
  if (auto m = (*prep)["max_repeat"].value<int64_t>()) c.max_repeat = static_cast<int>(*m);
  if (auto s = (*prep)["stem"].value<bool>()) c.stem = *s;
  c.validate();
  return c;
}

namespace detail {

inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_word(char c) { return is_lower(c) || is_digit(c) || c == '_'; }

// Maps curly apostrophes to ASCII, replaces every other non-ASCII code
// point with a space and lowercases.
inline std::string ascii_fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                    : static_cast<char>(c);
      ++i;
      continue;
    }
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x98 ||
         static_cast<unsigned char>(s[i + 2]) == 0x99)) {
      out += '\'';
      i += 3;
      continue;
    }
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    i += len;
    out += ' ';
  }
  return out;
}

// Drops @mentions, URLs, '#' markers and digits.
inline std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
  while (i < s.size()) {
    const bool at_word_start = i == 0 || !is_word(s[i - 1]);
    if (s[i] == '@') {
      ++i;
      while (i < s.size() && is_word(s[i])) ++i;
      out += ' ';
    } else if (at_word_start && (starts("http://") || starts("https://") || starts("www."))) {
      while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\n' && s[i] != '\r') ++i;
      out += ' ';
    } else if (s[i] == '#' || is_digit(s[i])) {
      ++i;
    } else {
      out += s[i++];
    }
  }
  return out;
}

// Replaces known contractions; an apostrophe left after a letter is dropped
// with the letters that follow it ("party's" -> "party").
inline std::string expand_contractions(
    std::string_view s, const std::unordered_map<std::string, std::string>& table) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_lower(s[i]) && s[i] != '\'') {
      out += s[i++];
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (is_lower(s[j]) || s[j] == '\'')) ++j;
    std::string_view run = s.substr(i, j - i);
    i = j;
    if (run.find('\'') == std::string_view::npos) {
      out += run;
      continue;
    }
    std::string_view core = run;
    while (!core.empty() && core.front() == '\'' && !table.contains(std::string(core))) {
      core.remove_prefix(1);
    }
    while (!core.empty() && core.back() == '\'' && !table.contains(std::string(core))) {
      core.remove_suffix(1);
    }
    out += ' ';
    if (auto it = table.find(std::string(core)); it != table.end()) {
      out += it->second;
    } else {
      std::size_t k = 0;
      while (k < core.size()) {
        if (core[k] == '\'') {
          if (k > 0 && is_lower(core[k - 1])) {
            ++k;
            while (k < core.size() && is_lower(core[k])) ++k;
          } else {
            out += ' ';
            ++k;
          }
        } else {
          out += core[k++];
        }
      }
    }
    out += ' ';
  }
  return out;
}

inline std::string collapse_runs(std::string_view s, int max_repeat) {
  std::string out;
  out.reserve(s.size());
  int run = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    run = (i > 0 && s[i] == s[i - 1]) ? run + 1 : 1;
    if (!is_lower(s[i]) || run <= max_repeat) out += s[i];
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r' ||
                            s[i] == '\f' || s[i] == '\v')) {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r' ||
                             s[j] == '\f' || s[j] == '\v')) {
      ++j;
    }
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool join_compounds(std::vector<std::string>& words,
                           const std::vector<std::pair<std::string, std::string>>& joins) {
  bool any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [a, b] : joins) {
      std::vector<std::string> next;
      next.reserve(words.size());
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i + 1 < words.size() && words[i] == a && words[i + 1] == b) {
          next.push_back(a + b);
          ++i;
          changed = true;
        } else {
          next.push_back(std::move(words[i]));
        }
      }
      words = std::move(next);
    }
    any = any || changed;
  }
  return any;
}

}  // namespace detail

inline std::string normalize(std::string_view text, const PrepConfig& config) {
  std::string s = detail::ascii_fold(text);
  s = detail::strip_markup(s);
  s = detail::expand_contractions(s, config.contractions);
  for (char& c : s) {
    if (!detail::is_lower(c)) c = ' ';
  }
  s = detail::collapse_runs(s, config.max_repeat);
  auto words = detail::split_ws(s);
  while (detail::join_compounds(words, config.compound_joins)) {
    bool collapsed = false;
    for (auto& w : words) {
      auto c = detail::collapse_runs(w, config.max_repeat);
      if (c != w) {
        w = std::move(c);
        collapsed = true;
      }
    }
    if (!collapsed) break;
  }
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  return detail::split_ws(text);
}

inline std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                                 const PrepConfig& config) {
  std::erase_if(tokens, [&](const std::string& t) { return config.stopwords.contains(t); });
  return tokens;
}

namespace detail {

// Porter (1980) suffix stripping.
class Porter {
 public:
  std::string operator()(std::string w) {
    b_ = std::move(w);
    if (b_.size() <= 2) return b_;
    step1ab();
    if (b_.size() > 1) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_;
  }

 private:
  std::string b_;
  std::size_t j_ = 0;  // end of stem (exclusive) after a successful ends()

  bool cons(std::size_t i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in b_[0, j_).
  int m() const {
    int n = 0;
    std::size_t i = 0;
    while (true) {
      if (i >= j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i >= j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i >= j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (std::size_t i = 0; i < j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool doublec(std::size_t end) const {
    if (end < 2) return false;
    return b_[end - 1] == b_[end - 2] && cons(end - 1);
  }

  // cvc at positions end-3, end-2, end-1, last not w, x or y.
  bool cvc(std::size_t end) const {
    if (end < 3 || !cons(end - 1) || cons(end - 2) || !cons(end - 3)) return false;
    const char c = b_[end - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends(std::string_view s) {
    if (s.size() > b_.size()) return false;
    if (std::string_view(b_).substr(b_.size() - s.size()) != s) return false;
    j_ = b_.size() - s.size();
    return true;
  }

  void setto(std::string_view s) { b_ = b_.substr(0, j_) + std::string(s); }

  void r(std::string_view s) {
    if (m() > 0) setto(s);
  }

  void step1ab() {
    if (b_.back() == 's') {
      if (ends("sses")) b_.resize(b_.size() - 2);
      else if (ends("ies")) setto("i");
      else if (b_.size() >= 2 && b_[b_.size() - 2] != 's') b_.pop_back();
    }
    if (ends("eed")) {
      if (m() > 0) b_.pop_back();
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      b_.resize(j_);
      if (ends("at")) setto("ate");
      else if (ends("bl")) setto("ble");
      else if (ends("iz")) setto("ize");
      else if (doublec(b_.size())) {
        const char c = b_.back();
        if (c != 'l' && c != 's' && c != 'z') b_.pop_back();
      } else {
        j_ = b_.size();
        if (m() == 1 && cvc(b_.size())) b_ += 'e';
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_.back() = 'i';
  }

  void step2() {
    if (b_.size() < 2) return;
    switch (b_[b_.size() - 2]) {
      case 'a':
        if (ends("ational")) { r("ate"); break; }
        if (ends("tional")) { r("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { r("ence"); break; }
        if (ends("anci")) { r("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { r("ize"); break; }
        break;
      case 'l':
        if (ends("bli")) { r("ble"); break; }
        if (ends("alli")) { r("al"); break; }
        if (ends("entli")) { r("ent"); break; }
        if (ends("eli")) { r("e"); break; }
        if (ends("ousli")) { r("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { r("ize"); break; }
        if (ends("ation")) { r("ate"); break; }
        if (ends("ator")) { r("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { r("al"); break; }
        if (ends("iveness")) { r("ive"); break; }
        if (ends("fulness")) { r("ful"); break; }
        if (ends("ousness")) { r("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { r("al"); break; }
        if (ends("iviti")) { r("ive"); break; }
        if (ends("biliti")) { r("ble"); break; }
        break;
      case 'g':
        if (ends("logi")) { r("log"); break; }
        break;
      default: break;
    }
  }

  void step3() {
    switch (b_.back()) {
      case 'e':
        if (ends("icate")) { r("ic"); break; }
        if (ends("ative")) { r(""); break; }
        if (ends("alize")) { r("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { r("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { r("ic"); break; }
        if (ends("ful")) { r(""); break; }
        break;
      case 's':
        if (ends("ness")) { r(""); break; }
        break;
      default: break;
    }
  }

  void step4() {
    if (b_.size() < 2) return;
    bool hit = false;
    switch (b_[b_.size() - 2]) {
      case 'a': hit = ends("al"); break;
      case 'c': hit = ends("ance") || ends("ence"); break;
      case 'e': hit = ends("er"); break;
      case 'i': hit = ends("ic"); break;
      case 'l': hit = ends("able") || ends("ible"); break;
      case 'n': hit = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
      case 'o':
        if (ends("ion") && j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't')) hit = true;
        else hit = ends("ou");
        break;
      case 's': hit = ends("ism"); break;
      case 't': hit = ends("ate") || ends("iti"); break;
      case 'u': hit = ends("ous"); break;
      case 'v': hit = ends("ive"); break;
      case 'z': hit = ends("ize"); break;
      default: break;
    }
    if (hit && m() > 1) b_.resize(j_);
  }

  void step5() {
    j_ = b_.size();
    if (b_.back() == 'e') {
      j_ = b_.size() - 1;
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(b_.size() - 1))) b_.pop_back();
    }
    j_ = b_.size();
    if (b_.back() == 'l' && doublec(b_.size()) && m() > 1) b_.pop_back();
  }
};

}  // namespace detail

// Porter stemming repeated to a fixed point so stem(stem(x)) == stem(x).
// Tokens of three characters or fewer are left alone.
inline std::string stem_word(const std::string& token) {
  detail::Porter porter;
  std::string cur = token;
  while (cur.size() > 3) {
    std::string next = porter(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

inline std::vector<std::string> stem(std::vector<std::string> tokens) {
  for (auto& t : tokens) t = stem_word(t);
  return tokens;
}

inline ProcessedDoc run_pipeline(const Document& doc, const PrepConfig& config) {
  ProcessedDoc out;
  out.id = doc.id;
  out.party = doc.party;
  out.label = doc.label;
  out.tokens = remove_stopwords(tokenize(normalize(doc.text, config)), config);
  if (config.stem) out.tokens = remove_stopwords(stem(std::move(out.tokens)), config);
  return out;
}

inline std::vector<ProcessedDoc> run_pipeline(const std::vector<Document>& docs,
                                              const PrepConfig& config,
                                              unsigned threads = 1) {
  std::vector<ProcessedDoc> out(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = run_pipeline(docs[i], config);
  });
  return out;
}

inline nlohmann::json to_json(const ProcessedDoc& d) {
  nlohmann::json j{{"id", d.id}, {"tokens", d.tokens}};
  if (d.party) j["party"] = to_string(*d.party);
  if (d.label) j["label"] = to_string(*d.label);
  return j;
}

inline std::string processed_jsonl(std::span<const ProcessedDoc> docs) {
  std::string out;
  for (const auto& d : docs) out += to_json(d).dump() + '\n';
  return out;
}

inline std::vector<ProcessedDoc> parse_processed_jsonl(std::string_view data) {
  std::vector<ProcessedDoc> out;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    auto raw = trim(data.substr(pos, nl - pos));
    pos = nl + 1;
    ++line;
    if (raw.empty()) continue;
    try {
      auto j = nlohmann::json::parse(raw);
      ProcessedDoc d;
      d.id = j.at("id").get<std::string>();
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("party")) {
        d.party = parse_party(j["party"].get<std::string>());
        if (!d.party) throw DataError("unknown party");
      }
      if (j.contains("label")) {
        d.label = parse_label(j["label"].get<std::string>());
        if (!d.label) throw DataError("unknown label");
      }
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw DataError("processed document line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace polsent
