#include <gtest/gtest.h>

#include <sstream>

#include "polsent/annotate.hpp"
#include "support.hpp"

using namespace polsent;

namespace {

std::vector<Document> posts() {
  return {{"a", "The ANC failed again", Party::ANC, {}, {}, "f"},
          {"b", "Great rally by the EFF", Party::EFF, {}, {}, "f"},
          {"c", "DA wins the ward", Party::DA, {}, {}, "f"},
          {"d", "ActionSA promises jobs", Party::ActionSA, {}, {}, "f"}};
}

std::vector<std::string> written_ids(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& d : ingest(path, Format::JSONL).set.documents) out.push_back(d.id);
  return out;
}

}  // namespace

TEST(Highlight, MarksHintWordsCaseInsensitively) {
  std::unordered_set<std::string> hints{"failed", "great"};
  EXPECT_EQ(highlight("The ANC Failed, great!", hints, false), "The ANC [[Failed]], [[great]]!");
  EXPECT_EQ(highlight("", hints, false), "");
  EXPECT_NE(highlight("failed", hints, true).find("\x1b["), std::string::npos);
}

TEST(Annotation, LabelsUndoAndQuit) {
  support::TempDir dir;
  const auto out = dir / "labels.jsonl";
  AnnotationSession s(posts(), {}, out);
  std::istringstream in("p\nn\nu\nx\nn\ns\np\nq\n");
  std::ostringstream log;
  EXPECT_EQ(s.run(in, log), 3u);
  EXPECT_NE(log.str().find("Unknown key"), std::string::npos);
  auto docs = ingest(out, Format::JSONL).set.documents;
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[0].label, Label::Positive);
  EXPECT_EQ(docs[1].id, "b");
  EXPECT_EQ(docs[1].label, Label::Negative);
  EXPECT_EQ(docs[2].id, "d");
  EXPECT_EQ(docs[2].label, Label::Positive);
  for (const auto& d : docs) EXPECT_EQ(d.provenance, Provenance::Manual);
}

TEST(Annotation, ResumeSkipsLabeledIds) {
  support::TempDir dir;
  const auto out = dir / "labels.jsonl";
  {
    AnnotationSession s(posts(), {}, out);
    std::istringstream in("p\nn\n");
    std::ostringstream log;
    EXPECT_EQ(s.run(in, log), 2u);
  }
  AnnotationSession again(posts(), {}, out);
  std::istringstream in("n\nn\n");
  std::ostringstream log;
  EXPECT_EQ(again.run(in, log), 2u);
  EXPECT_NE(log.str().find("All documents handled"), std::string::npos);
  EXPECT_EQ(written_ids(out), (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Annotation, UndoAcrossSessionIsRefused) {
  support::TempDir dir;
  const auto out = dir / "labels.jsonl";
  {
    AnnotationSession s(posts(), {}, out);
    std::istringstream in("p\n");
    std::ostringstream log;
    s.run(in, log);
  }
  AnnotationSession again(posts(), {}, out);
  std::istringstream in("u\nq\n");
  std::ostringstream log;
  EXPECT_EQ(again.run(in, log), 0u);
  EXPECT_NE(log.str().find("Nothing to undo"), std::string::npos);
  EXPECT_EQ(written_ids(out), std::vector<std::string>{"a"});
}

TEST(Annotation, UnwritableOutputIsDataError) {
  EXPECT_THROW(AnnotationSession(posts(), {}, "/nonexistent/dir/out.jsonl"), DataError);
}
