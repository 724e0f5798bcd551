#include <gtest/gtest.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "restyle/corpus.hpp"

using namespace restyle;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("restyle_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every file below `root`, relative path -> contents.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

const fs::path kCorpus = fs::path(RESTYLE_TEST_DATA) / "corpus";

}  // namespace

TEST(Split, PureFunctionOfIdAndSeed) {
  SplitRatios r;
  for (int i = 0; i < 100; ++i) {
    std::string id = "p" + std::to_string(i);
    EXPECT_EQ(assign_split(id, r, 7), assign_split(id, r, 7));
  }
}

TEST(Split, AllTrain) {
  for (int i = 0; i < 200; ++i) EXPECT_EQ(assign_split(std::to_string(i), {1, 0, 0}, 3), Split::Train);
}

TEST(Split, ProportionsWithinOnePercent) {
  int counts[3] = {};
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<int>(assign_split("id" + std::to_string(i), {}, 42))];
  EXPECT_NEAR(counts[0] / 10000.0, 0.8, 0.01);
  EXPECT_NEAR(counts[1] / 10000.0, 0.1, 0.01);
  EXPECT_NEAR(counts[2] / 10000.0, 0.1, 0.01);
}

TEST(Split, SeedChangesAssignment) {
  int moved = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string id = "x" + std::to_string(i);
    moved += assign_split(id, {0.5, 0, 0.5}, 1) != assign_split(id, {0.5, 0, 0.5}, 2);
  }
  EXPECT_GT(moved, 350);
  EXPECT_LT(moved, 650);
}

TEST(Split, ParseRatios) {
  SplitRatios r = parse_split_ratios("0.7,0.2,0.1");
  EXPECT_DOUBLE_EQ(r.train, 0.7);
  EXPECT_DOUBLE_EQ(r.test, 0.1);
  EXPECT_THROW(parse_split_ratios("0.5,0.5"), std::invalid_argument);
  EXPECT_THROW(parse_split_ratios("0.5,0.5,0.5"), std::invalid_argument);
  EXPECT_THROW(parse_split_ratios("1,0,0,0"), std::invalid_argument);
  EXPECT_THROW(parse_split_ratios("1.2,-0.2,0"), std::invalid_argument);
  EXPECT_THROW(parse_split_ratios("a,b,c"), std::invalid_argument);
}

TEST(Manifest, JsonLineRoundTrip) {
  ManifestRecord r;
  r.program_id = "sub/dir/p1";
  r.task = TransformId::Reuse;
  r.original = "original/sub/dir/p1.py";
  r.tests = {"tests/sub/dir/p1/1.in"};
  r.split = Split::Val;
  r.status = RecordStatus::VerifyFailed;
  r.skip_reason = "why \"quoted\"\n";
  r.edits = 4;
  std::string line = to_json_line(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_LT(line.find("\"edits\""), line.find("\"program_id\""));
  EXPECT_EQ(parse_json_line(line), r);
  EXPECT_THROW(parse_json_line("{\"program_id\": 3}"), std::runtime_error);
  EXPECT_THROW(parse_json_line("not json"), std::runtime_error);
}

TEST(Generate, ThreeOfFiveHaveComprehensions) {
  TempDir tmp;
  fs::path src = tmp.path() / "src";
  put(src / "a.py", "xs = [i for i in range(3)]\nprint(xs)\n");
  put(src / "b.py", "print(1)\n");
  put(src / "c.py", "ys = [c * 2 for c in 'ab' if c]\nprint(ys)\n");
  put(src / "d.py", "print(sum(i for i in range(3)))\n");
  put(src / "nested/e.py", "zs = [(p, q) for p in range(2) for q in range(p)]\nprint(zs)\n");
  put(src / "notes.txt", "ignored\n");
  GenerateConfig cfg;
  cfg.task = TransformId::ListComp;
  CorpusManifest m = generate(src, tmp.path() / "out", cfg);
  StatusCounts c = m.counts();
  EXPECT_EQ(c.total, 5u);
  EXPECT_EQ(c[RecordStatus::Transformed], 3u);
  EXPECT_EQ(c[RecordStatus::IdentitySkipped], 2u);
  ASSERT_EQ(m.records.size(), 5u);
  EXPECT_EQ(m.records[4].program_id, "nested/e");
  EXPECT_EQ(m.records[1].skip_reason, "no-candidates");
  EXPECT_EQ(read_manifest(tmp.path() / "out/manifest.jsonl").records, m.records);
  EXPECT_TRUE(fs::exists(tmp.path() / "out/transformed/nested/e.py"));
  EXPECT_TRUE(fs::exists(tmp.path() / "out/summary.json"));
}

TEST(Generate, EmptyDirectory) {
  TempDir tmp;
  fs::create_directories(tmp.path() / "src");
  CorpusManifest m = generate(tmp.path() / "src", tmp.path() / "out", {});
  EXPECT_TRUE(m.records.empty());
  EXPECT_EQ(m.counts().total, 0u);
  EXPECT_EQ(slurp(tmp.path() / "out/manifest.jsonl"), "");
}

TEST(Generate, DynamicCodeIsIdentitySkipped) {
  TempDir tmp;
  put(tmp.path() / "src/p.py", "Val = 3\nprint(eval('Val'))\n");
  GenerateConfig cfg;
  cfg.task = TransformId::Casing;
  CorpusManifest m = generate(tmp.path() / "src", tmp.path() / "out", cfg);
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].status, RecordStatus::IdentitySkipped);
  EXPECT_EQ(m.records[0].skip_reason, "dynamic-code");
}

TEST(Generate, PerFileFailuresAreRecordedAndConserved) {
  TempDir tmp;
  fs::path src = tmp.path() / "src", tests = tmp.path() / "tests";
  put(src / "bad_syntax.py", "def (:\n");
  put(src / "good.py", "xs = [i for i in range(3)]\nprint(xs)\n");
  put(tests / "good/1.in", "");
  // The original itself disagrees with its recorded output.
  put(src / "wrong_out.py", "xs = [i for i in range(3)]\nprint(xs)\n");
  put(tests / "wrong_out/1.in", "");
  put(tests / "wrong_out/1.out", "[7]\n");
  put(src / "crash.py", "xs = [i for i in range(3)]\nraise SystemExit(xs[0] + 3)\n");
  put(tests / "crash/1.in", "");
  put(src / "skip.py", "print(2)\n");
  GenerateConfig cfg;
  cfg.tests_dir = tests;
  cfg.jobs = 3;
  CorpusManifest m = generate(src, tmp.path() / "out", cfg);
  std::map<std::string, RecordStatus> status;
  for (const auto& r : m.records) status[r.program_id] = r.status;
  EXPECT_EQ(status["bad_syntax"], RecordStatus::Unreadable);
  EXPECT_EQ(status["good"], RecordStatus::Transformed);
  EXPECT_EQ(status["wrong_out"], RecordStatus::RunFailed);
  EXPECT_EQ(status["crash"], RecordStatus::RunFailed);
  EXPECT_EQ(status["skip"], RecordStatus::IdentitySkipped);
  StatusCounts c = m.counts();
  std::size_t sum = 0;
  for (auto n : c.by_status) sum += n;
  EXPECT_EQ(sum, c.total);
  EXPECT_EQ(c.total, 5u);
  for (const auto& r : m.records) {
    if (r.program_id == "good") {
      EXPECT_EQ(r.verdict, "equivalent");
      EXPECT_EQ(r.tests, std::vector<std::string>{"tests/good/1.in"});
      EXPECT_TRUE(fs::exists(tmp.path() / "out" / r.tests[0]));
    }
  }
}

TEST(Generate, MissingSourceDirectoryIsAConfigurationError) {
  TempDir tmp;
  EXPECT_THROW(generate(tmp.path() / "nope", tmp.path() / "out", {}), std::invalid_argument);
  GenerateConfig cfg;
  cfg.ratios = {0.5, 0.1, 0.1};
  fs::create_directories(tmp.path() / "src");
  EXPECT_THROW(generate(tmp.path() / "src", tmp.path() / "out", cfg), std::invalid_argument);
  cfg = {};
  cfg.task = TransformId::Decorator;
  cfg.options.decorator_allowlist.clear();
  EXPECT_THROW(generate(tmp.path() / "src", tmp.path() / "out", cfg), std::invalid_argument);
}

TEST(Generate, GoldDirection) {
  TempDir tmp;
  GenerateConfig cfg;
  for (TransformId task : {TransformId::ListComp, TransformId::Decorator, TransformId::Casing,
                           TransformId::Docstring, TransformId::Reuse}) {
    cfg.task = task;
    fs::path out = tmp.path() / std::string(to_string(task));
    CorpusManifest m = generate(kCorpus / "src", out, cfg);
    int transformed = 0;
    for (const auto& r : m.records) {
      if (r.status != RecordStatus::Transformed) continue;
      ++transformed;
      EXPECT_NE(slurp(out / r.original), slurp(out / r.transformed));
      if (task == TransformId::Reuse) {
        EXPECT_EQ(r.input, r.original);
        EXPECT_EQ(r.expected, r.transformed);
      } else {
        EXPECT_EQ(r.input, r.transformed);
        EXPECT_EQ(r.expected, r.original);
      }
    }
    EXPECT_GE(transformed, 3) << to_string(task);
  }
}

TEST(Generate, SameSeedSameBytesAcrossWorkerCounts) {
  TempDir tmp;
  GenerateConfig cfg;
  cfg.task = TransformId::Casing;
  cfg.seed = 11;
  cfg.tests_dir = kCorpus / "tests";
  cfg.jobs = 1;
  generate(kCorpus / "src", tmp.path() / "a", cfg);
  cfg.jobs = 4;
  generate(kCorpus / "src", tmp.path() / "b", cfg);
  EXPECT_EQ(snapshot(tmp.path() / "a"), snapshot(tmp.path() / "b"));
}

TEST(Generate, RerunReplacesStaleOutput) {
  TempDir tmp;
  put(tmp.path() / "src/a.py", "xs = [i for i in range(3)]\n");
  put(tmp.path() / "out/transformed/old.py", "stale\n");
  generate(tmp.path() / "src", tmp.path() / "out", {});
  EXPECT_FALSE(fs::exists(tmp.path() / "out/transformed/old.py"));
}

TEST(Verify, ReportsEachTransformedRecord) {
  TempDir tmp;
  fs::path src = tmp.path() / "src", tests = tmp.path() / "tests";
  put(src / "a.py", "xs = [i for i in range(int(input()))]\nprint(xs)\n");
  put(tests / "a/1.in", "3\n");
  put(src / "b.py", "ys = [1 for _ in 'ab']\nprint(ys)\n");
  GenerateConfig cfg;
  generate(src, tmp.path() / "out", cfg);
  auto results = verify(tmp.path() / "out/manifest.jsonl", tests);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_TRUE(results[0].tested);
  EXPECT_TRUE(results[0].equivalent);
  EXPECT_FALSE(results[1].tested);

  // A tampered transformed file is caught.
  put(tmp.path() / "out/transformed/a.py", "print([])\n");
  results = verify(tmp.path() / "out/manifest.jsonl", tests);
  EXPECT_FALSE(results[0].equivalent);
}

namespace {

// Generates an all-test-split corpus for `task` and returns the out dir.
fs::path all_test_corpus(const TempDir& tmp, TransformId task) {
  GenerateConfig cfg;
  cfg.task = task;
  cfg.ratios = {0, 0, 1};
  cfg.tests_dir = kCorpus / "tests";
  cfg.jobs = 4;
  fs::path out = tmp.path() / "out";
  generate(kCorpus / "src", out, cfg);
  return out;
}

void copy_field(const fs::path& out, const fs::path& dest, std::string ManifestRecord::*field) {
  for (const auto& r : read_manifest(out / "manifest.jsonl").records) {
    if (r.status == RecordStatus::Transformed) put(dest / (r.program_id + ".py"), slurp(out / (r.*field)));
  }
}

}  // namespace

TEST(Evaluate, ExpectedAsOutputScoresOne) {
  TempDir tmp;
  fs::path out = all_test_corpus(tmp, TransformId::Docstring);
  copy_field(out, tmp.path() / "model", &ManifestRecord::expected);
  Evaluation ev = evaluate(out / "manifest.jsonl", tmp.path() / "model", std::nullopt, {}, 4);
  ASSERT_EQ(ev.rows.size(), 1u);
  for (double f : ev.rows[0].fractions) EXPECT_DOUBLE_EQ(f, 1.0);
  EXPECT_TRUE(ev.rows[0].applicable[kPassed]);
}

TEST(Evaluate, InputAsOutputPassesButIsNeverCorrect) {
  TempDir tmp;
  fs::path out = all_test_corpus(tmp, TransformId::ListComp);
  copy_field(out, tmp.path() / "model", &ManifestRecord::input);
  Evaluation ev = evaluate(out / "manifest.jsonl", tmp.path() / "model", std::nullopt, {}, 4);
  ASSERT_EQ(ev.rows.size(), 1u);
  const SummaryRow& row = ev.rows[0];
  EXPECT_DOUBLE_EQ(row.fractions[kNoUnexpectedAdded], 1.0);
  EXPECT_DOUBLE_EQ(row.fractions[kNoUnexpectedRemoved], 1.0);
  EXPECT_DOUBLE_EQ(row.fractions[kAddedCorrectly], 0.0);
  EXPECT_DOUBLE_EQ(row.fractions[kRemovedCorrectly], 0.0);
  EXPECT_DOUBLE_EQ(row.fractions[kPassed], 1.0);
  EXPECT_DOUBLE_EQ(row.fractions[kPassedCorrect], 0.0);
}

TEST(Evaluate, MissingOutputsScoreFalse) {
  TempDir tmp;
  fs::path out = all_test_corpus(tmp, TransformId::Casing);
  copy_field(out, tmp.path() / "model", &ManifestRecord::expected);
  auto records = read_manifest(out / "manifest.jsonl").records;
  std::string dropped;
  for (const auto& r : records) {
    if (r.status == RecordStatus::Transformed) dropped = r.program_id;
  }
  fs::remove(tmp.path() / "model" / (dropped + ".py"));
  Evaluation ev = evaluate(out / "manifest.jsonl", tmp.path() / "model");
  std::size_t n = ev.instances.size();
  for (const auto& inst : ev.instances) {
    if (inst.program_id != dropped) continue;
    EXPECT_EQ(inst.report.verdict, "missing-output");
    EXPECT_FALSE(inst.report.passed);
    EXPECT_FALSE(inst.report.compare.no_unexpected_added);
  }
  EXPECT_DOUBLE_EQ(ev.rows[0].fractions[kPassedCorrect], (n - 1.0) / n);
}

TEST(Evaluate, MissingOutputsDirectoryIsAConfigurationError) {
  TempDir tmp;
  fs::path out = all_test_corpus(tmp, TransformId::Docstring);
  EXPECT_THROW(evaluate(out / "manifest.jsonl", tmp.path() / "nope"), std::invalid_argument);
  EXPECT_THROW(evaluate(tmp.path() / "none.jsonl", tmp.path()), std::runtime_error);
}
