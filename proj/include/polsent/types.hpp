#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polsent/util.hpp"

namespace polsent {

enum class Party { ANC, DA, EFF, ActionSA, Other };
enum class Label { Positive, Negative };

// Hard decision produced from a label distribution; Abstain when the
// distribution is not confident enough.
enum class Decision { Positive, Negative, Abstain };

// Where a document's label came from.
enum class Provenance { None, Manual, Machine };

// Dataset roles: A is the whole corpus, B the four-party subset to label,
// C the annotated training seeds and D the annotated hold-out.
enum class Role { A, B, C, D, Synthetic };

inline constexpr std::array<Party, 4> kMainParties = {
    Party::ANC, Party::DA, Party::EFF, Party::ActionSA};

inline std::string_view to_string(Party p) {
  switch (p) {
    case Party::ANC: return "ANC";
    case Party::DA: return "DA";
    case Party::EFF: return "EFF";
    case Party::ActionSA: return "ActionSA";
    case Party::Other: return "Other";
  }
  return "Other";
}

inline std::string_view to_string(Label l) {
  return l == Label::Positive ? "positive" : "negative";
}

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Positive: return "positive";
    case Decision::Negative: return "negative";
    case Decision::Abstain: return "abstain";
  }
  return "abstain";
}

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::None: return "none";
    case Provenance::Manual: return "manual";
    case Provenance::Machine: return "machine";
  }
  return "none";
}

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::A: return "A";
    case Role::B: return "B";
    case Role::C: return "C";
    case Role::D: return "D";
    case Role::Synthetic: return "synthetic";
  }
  return "A";
}

inline std::optional<Party> parse_party(std::string_view s) {
  const std::string l = to_lower_ascii(trim(s));
  if (l == "anc") return Party::ANC;
  if (l == "da") return Party::DA;
  if (l == "eff") return Party::EFF;
  if (l == "actionsa") return Party::ActionSA;
  if (l == "other") return Party::Other;
  return std::nullopt;
}

inline std::optional<Label> parse_label(std::string_view s) {
  const std::string l = to_lower_ascii(trim(s));
  if (l == "positive" || l == "pos") return Label::Positive;
  if (l == "negative" || l == "neg") return Label::Negative;
  return std::nullopt;
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
  const std::string l = to_lower_ascii(trim(s));
  if (l == "none") return Provenance::None;
  if (l == "manual") return Provenance::Manual;
  if (l == "machine") return Provenance::Machine;
  return std::nullopt;
}

inline Label opposite(Label l) {
  return l == Label::Positive ? Label::Negative : Label::Positive;
}

inline Decision to_decision(Label l) {
  return l == Label::Positive ? Decision::Positive : Decision::Negative;
}

// One social-media post.
struct Document {
  std::string id;
  std::string text;
  std::optional<Party> party;
  std::optional<Label> label;
  Provenance provenance = Provenance::None;
  std::string source;

  friend bool operator==(const Document&, const Document&) = default;
};

struct DocumentSet {
  std::vector<Document> documents;
  Role role = Role::A;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

// A document after text preprocessing.
struct ProcessedDoc {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<Party> party;
  std::optional<Label> label;

  friend bool operator==(const ProcessedDoc&, const ProcessedDoc&) = default;
};

}  // namespace polsent
