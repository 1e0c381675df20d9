#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "polsent/corpus.hpp"
#include "polsent/types.hpp"
#include "polsent/util.hpp"

namespace polsent {

// Marks words found in the hint list as [[word]] (or bold with color).
inline std::string highlight(std::string_view text, const std::unordered_set<std::string>& hints,
                             bool color = false) {
  std::string out;
  std::size_t i = 0;
  auto is_letter = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '\'';
  };
  while (i < text.size()) {
    if (!is_letter(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_letter(text[j])) ++j;
    auto word = text.substr(i, j - i);
    if (hints.contains(to_lower_ascii(word))) {
      out += color ? "\x1b[1;33m" : "[[";
      out += word;
      out += color ? "\x1b[0m" : "]]";
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

// One-document-at-a-time labeling. Each decision is appended to the output
// file and flushed, so a crash loses at most the current document; ids
// already in the file are skipped on the next run.
class AnnotationSession {
 public:
  AnnotationSession(std::vector<Document> docs, std::unordered_set<std::string> hints,
                    std::string out_path, bool color = false)
      : docs_(std::move(docs)), hints_(std::move(hints)), out_path_(std::move(out_path)), color_(color) {
    if (std::filesystem::exists(out_path_)) {
      auto prior = ingest(out_path_, Format::JSONL);
      for (auto& d : prior.set.documents) {
        done_.insert(d.id);
        written_.push_back(d);
      }
    }
    std::ofstream probe(out_path_, std::ios::app);
    if (!probe) throw DataError("cannot write annotation output: " + out_path_);
  }

  // Keys: p positive, n negative, s skip, u undo, q quit. Returns the number
  // of records written in this session.
  std::size_t run(std::istream& in, std::ostream& out) {
    std::size_t labeled = 0;
    std::vector<std::size_t> history;  // doc indices labeled this session
    std::size_t i = 0;
    std::unordered_set<std::size_t> skipped;
    while (true) {
      while (i < docs_.size() && (done_.contains(docs_[i].id) || skipped.contains(i))) ++i;
      if (i >= docs_.size()) {
        out << "All documents handled.\n";
        break;
      }
      const auto& d = docs_[i];
      out << "\n[" << done_.size() << " labeled] id " << d.id;
      if (d.party) out << "  party " << to_string(*d.party);
      out << "\n" << highlight(d.text, hints_, color_) << "\n(p)ositive (n)egative (s)kip (u)ndo (q)uit > "
          << std::flush;
      std::string line;
      if (!std::getline(in, line)) break;
      const auto key = to_lower_ascii(trim(line));
      if (key == "q") break;
      if (key == "s") {
        skipped.insert(i);
        continue;
      }
      if (key == "u") {
        if (written_.empty() || history.empty()) {
          out << "Nothing to undo in this session.\n";
          continue;
        }
        done_.erase(written_.back().id);
        written_.pop_back();
        rewrite();
        i = history.back();
        history.pop_back();
        --labeled;
        continue;
      }
      if (key != "p" && key != "n") {
        out << "Unknown key '" << key << "'.\n";
        continue;
      }
      Document r = d;
      r.label = key == "p" ? Label::Positive : Label::Negative;
      r.provenance = Provenance::Manual;
      append(r);
      history.push_back(i);
      ++labeled;
    }
    return labeled;
  }

  const std::vector<Document>& written() const { return written_; }

 private:
  void append(const Document& d) {
    std::ofstream f(out_path_, std::ios::app | std::ios::binary);
    f << to_json(d).dump() << '\n';
    f.flush();
    if (!f) throw DataError("write failed: " + out_path_);
    done_.insert(d.id);
    written_.push_back(d);
  }

  void rewrite() {
    DocumentSet s{written_, Role::C};
    write_file(out_path_, serialize(s, Format::JSONL));
  }

  std::vector<Document> docs_;
  std::unordered_set<std::string> hints_;
  std::string out_path_;
  bool color_;
  std::unordered_set<std::string> done_;
  std::vector<Document> written_;
};

}  // namespace polsent
