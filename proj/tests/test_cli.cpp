#include <gtest/gtest.h>

#include <fstream>

#include "polsent/util.hpp"
#include "support.hpp"

using support::run_cli;

namespace {

std::size_t line_count(const std::string& path) { return polsent::read_lines(path).size(); }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  support::TempDir dir;
  EXPECT_EQ(run_cli("", dir.path()).code, 1);
  EXPECT_EQ(run_cli("no-such-command", dir.path()).code, 1);
  EXPECT_EQ(run_cli("synth", dir.path()).code, 1);
  EXPECT_EQ(run_cli("synth --out a.jsonl --rate 0", dir.path()).code, 1);
  EXPECT_EQ(run_cli("report --counts a.csv --input b.jsonl", dir.path()).code, 1);
}

TEST(Cli, MissingInputIsDataError) {
  support::TempDir dir;
  auto r = run_cli("prep --input missing.jsonl --out p.jsonl", dir.path());
  EXPECT_EQ(r.code, 2) << r.output;
}

TEST(Cli, SynthSelflabelEvaluateChain) {
  support::TempDir dir;
  ASSERT_EQ(run_cli("synth --n-docs 600 --rate 0.8 --label-fraction 0.1 --holdout-docs 100 --seed 3 "
                    "--out corpus.jsonl --truth-out truth.csv --holdout-out hold.jsonl",
                    dir.path())
                .code,
            0);
  auto sl = run_cli("selflabel --corpus corpus.jsonl --holdout hold.jsonl --batches 50,200 --min-df 1 "
                    "--labels-out labels.csv --labeled-out labeled.jsonl --audit-out audit.jsonl",
                    dir.path());
  ASSERT_EQ(sl.code, 0) << sl.output;
  auto ev = run_cli("evaluate --pred labeled.jsonl --truth truth.csv --report eval.json", dir.path());
  ASSERT_EQ(ev.code, 0) << ev.output;
  auto rep = nlohmann::json::parse(polsent::read_file(dir / "eval.json"));
  EXPECT_GE(rep["macro_f1"].get<double>(), 0.95);
}

TEST(Cli, EvaluateListsMismatchedIds) {
  support::TempDir dir;
  std::ofstream(dir / "pred.csv") << "id,label\n1,positive\n2,negative\n9,positive\n";
  std::ofstream(dir / "truth.csv") << "id,label\n1,positive\n2,negative\n3,negative\n";
  auto r = run_cli("evaluate --pred pred.csv --truth truth.csv", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("9"), std::string::npos);
  EXPECT_NE(r.output.find("3"), std::string::npos);
}

TEST(Cli, ReportRendersTable6) {
  support::TempDir dir;
  std::ofstream(dir / "counts.csv") << "party,total,positive\nANC,195342,51407\nEFF,87430,33825\n"
                                       "ActionSA,60990,28756\nDA,58154,21545\n";
  auto r = run_cli("report --counts counts.csv --json-out t.json", dir.path());
  ASSERT_EQ(r.code, 0) << r.output;
  auto j = nlohmann::json::parse(polsent::read_file(dir / "t.json"));
  const std::map<std::string, std::pair<int, int>> want = {
      {"ANC", {26, 74}}, {"EFF", {39, 61}}, {"ActionSA", {47, 53}}, {"DA", {37, 63}}};
  std::size_t seen = 0;
  for (const auto& row : j["parties"]) {
    const auto& w = want.at(row["party"].get<std::string>());
    EXPECT_EQ(row["positive_pct"].get<int>(), w.first);
    EXPECT_EQ(row["negative_pct"].get<int>(), w.second);
    ++seen;
  }
  EXPECT_EQ(seen, 4u);
  EXPECT_EQ(j["total"]["positive_pct"].get<int>(), 34);
  EXPECT_NE(r.output.find("34"), std::string::npos);
  EXPECT_NE(r.output.find("66"), std::string::npos);
}

TEST(Cli, VerifyDetectsDrift) {
  support::TempDir dir;
  ASSERT_EQ(run_cli("synth --n-docs 50 --out c.jsonl --truth-out t.csv", dir.path()).code, 0);
  auto ok = run_cli("verify c.jsonl.manifest.json", dir.path());
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_NE(ok.output.find("OK"), std::string::npos);
  std::ofstream(dir / "t.csv", std::ios::app) << "extra,positive\n";
  auto bad = run_cli("verify c.jsonl.manifest.json", dir.path());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.output.find("CHANGED"), std::string::npos);
}

TEST(Cli, AnnotateRefusesNonInteractiveInput) {
  support::TempDir dir;
  ASSERT_EQ(run_cli("synth --n-docs 10 --out c.jsonl", dir.path()).code, 0);
  auto r = run_cli("annotate --input c.jsonl --out l.jsonl", dir.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("interactive terminal"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigFile) {
  support::TempDir dir;
  std::ofstream(dir / "run.toml") << "[synth]\nn-docs = 40\nseed = 7\n";
  ASSERT_EQ(run_cli("--config run.toml synth --out a.jsonl", dir.path()).code, 0);
  EXPECT_EQ(line_count(dir / "a.jsonl"), 40u);
  ASSERT_EQ(run_cli("--config run.toml synth --n-docs 25 --out b.jsonl", dir.path()).code, 0);
  EXPECT_EQ(line_count(dir / "b.jsonl"), 25u);
}

TEST(Cli, WrongStageInputNamesProducer) {
  support::TempDir dir;
  ASSERT_EQ(run_cli("synth --n-docs 20 --out c.jsonl", dir.path()).code, 0);
  auto r = run_cli("vocab --input c.jsonl --out v.csv", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("format mismatch"), std::string::npos);
}

TEST(Cli, ThreadCountDoesNotChangeArtifacts) {
  support::TempDir dir;
  ASSERT_EQ(run_cli("synth --n-docs 300 --out c.jsonl", dir.path()).code, 0);
  ASSERT_EQ(run_cli("prep --input c.jsonl --out p1.jsonl", dir.path(), "POLSENT_THREADS=1").code, 0);
  ASSERT_EQ(run_cli("prep --input c.jsonl --out p4.jsonl", dir.path(), "POLSENT_THREADS=4").code, 0);
  EXPECT_TRUE(support::files_identical(dir / "p1.jsonl", dir / "p4.jsonl"));
}
