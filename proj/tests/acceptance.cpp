// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "diff_oracle.hpp"
#include "json.hpp"
#include "restyle/corpus.hpp"
#include "restyle/diffcorrect.hpp"
#include "restyle/transforms.hpp"

using namespace restyle;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RESTYLE_TEST_DATA;
const fs::path kCorpus = kData / "corpus";
const TransformId kTasks[] = {TransformId::ListComp, TransformId::Decorator, TransformId::Casing,
                              TransformId::Docstring, TransformId::Reuse};

struct Result {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

std::vector<std::string> corpus_ids() {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(kCorpus / "src")) {
    if (e.path().extension() == ".py") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

unsigned workers() { return std::max(2u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers(); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("restyle_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// --------------------------------------------------------------------------

Result round_trip() {
  auto ids = corpus_ids();
  int ok = 0;
  std::string bad;
  for (const auto& id : ids) {
    try {
      std::string src = slurp(kCorpus / "src" / (id + ".py"));
      SourceTree first = SourceTree::parse(src);
      SourceTree again = SourceTree::parse(render(first));
      if (render(first) == normalize_newlines(src) && dump(again) == dump(first)) {
        ++ok;
        continue;
      }
    } catch (const std::exception& e) {
      bad += " " + id + "(" + e.what() + ")";
      continue;
    }
    bad += " " + id;
  }
  return {ok == static_cast<int>(ids.size()) && ids.size() >= 30,
          std::to_string(ok) + "/" + std::to_string(ids.size()) + " programs" + bad};
}

Result semantics() {
  auto ids = corpus_ids();
  struct Job {
    std::string id;
    TransformId task;
    std::string verdict;
    bool changed = false;
    bool ok = false;
  };
  std::vector<Job> jobs;
  for (TransformId t : kTasks) {
    for (const auto& id : ids) jobs.push_back({id, t});
  }
  parallel_for(jobs.size(), [&](std::size_t i) {
    Job& j = jobs[i];
    try {
      std::string src = slurp(kCorpus / "src" / (j.id + ".py"));
      auto cases = load_test_cases((kCorpus / "tests" / j.id).string());
      if (cases.empty()) {
        j.verdict = "no tests";
        return;
      }
      TransformResult r = apply_transform(j.task, SourceTree::parse(src));
      j.changed = !r.record.is_identity();
      if (!j.changed && r.tree.text() == normalize_newlines(src)) {
        j.ok = true;
        return;
      }
      Verdict v = equivalent(src, r.tree.text(), cases);
      j.ok = v.equivalent();
      j.verdict = std::string(to_string(v)) + " " + v.detail;
    } catch (const std::exception& e) {
      j.verdict = e.what();
    }
  });
  int ok = 0;
  std::map<TransformId, int> changed;
  std::string bad;
  for (const auto& j : jobs) {
    ok += j.ok;
    changed[j.task] += j.changed;
    if (!j.ok) bad += "\n      " + std::string(to_string(j.task)) + " " + j.id + ": " + j.verdict;
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(jobs.size()) + " equivalent; changed:";
  for (TransformId t : kTasks) detail += " " + std::string(to_string(t)) + "=" + std::to_string(changed[t]);
  return {ok == static_cast<int>(jobs.size()), detail + bad};
}

Result coin_game() {
  std::string src = slurp(kCorpus / "src/case_coin_game.py");
  TransformResult r = lowercase_variables(SourceTree::parse(src));
  // Independent count of the K reference sites: whole-word matches.
  std::regex word_k("\\bK\\b");
  auto sites = std::distance(std::sregex_iterator(src.begin(), src.end(), word_k), std::sregex_iterator());
  std::string want = std::regex_replace(src, word_k, "k");

  bool all_k = !r.record.edits.empty();
  for (const auto& e : r.record.edits) all_k &= e.detail == "K->k";
  std::map<std::string, std::string> skipped;
  for (const auto& s : r.record.skipped) skipped[s.subject] = s.reason;
  bool skips = skipped == std::map<std::string, std::string>{{"A", "conflict-existing-name"},
                                                              {"N", "conflict-existing-name"}};
  bool text = r.tree.text() == want;
  std::string detail = std::to_string(r.record.edits.size()) + " edits at " + std::to_string(sites) +
                       " K sites, only K->k: " + (all_k ? "yes" : "no") +
                       ", N/A conflict-existing-name: " + (skips ? "yes" : "no") +
                       ", text matches: " + (text ? "yes" : "no");
  return {all_k && skips && text && static_cast<long>(r.record.edits.size()) == sites, detail};
}

std::vector<std::string> random_lines(std::mt19937& rng) {
  std::uniform_int_distribution<int> len(0, 20), sym(0, 2);
  std::vector<std::string> out(len(rng));
  for (auto& l : out) l = std::string(1, static_cast<char>('a' + sym(rng)));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& l : v) s += l + "\n";
  return s;
}

Result diff_oracle() {
  std::mt19937 rng(20240);
  const int total = 1000;
  int agree = 0, ambiguous = 0;
  std::string log;
  for (int i = 0; i < total; ++i) {
    auto in = random_lines(rng), out = random_lines(rng), ex = random_lines(rng);
    CodeCompare c = code_compare(join(in), join(out), join(ex));
    oracle::Score o = oracle::code_compare(in, out, ex);
    oracle::Score alt = oracle::code_compare(in, out, ex, true);
    ambiguous += !(o == alt);
    oracle::Score ours{c.removed_correctly, c.no_unexpected_removed, c.added_correctly, c.no_unexpected_added};
    if (ours == o) {
      ++agree;
      continue;
    }
    log += "\n      disagreement " + std::to_string(i) + ": input=" + std::to_string(in.size()) +
           " lines, output=" + std::to_string(out.size()) + ", expected=" + std::to_string(ex.size()) +
           (o == alt ? "" : " (booleans depend on the choice of minimal script)");
  }
  std::ostringstream d;
  d << agree << "/" << total << " agree (need >= 995); booleans change under the opposite insert/delete "
    << "tie-break on " << ambiguous << "/" << total << " triples" << log;
  return {agree * 1000 >= 995 * total, d.str()};
}

Result partial_rename_triple() {
  fs::path dir = kData / "casing_partial_rename";
  CodeCompare c = code_compare(slurp(dir / "input.py"), slurp(dir / "output.py"), slurp(dir / "expected.py"));
  auto b = [](bool v) { return v ? "T" : "F"; };
  std::string got = std::string(b(c.added_correctly)) + b(c.removed_correctly) + b(c.no_unexpected_removed) +
                    b(c.no_unexpected_added);
  return {got == "TTFF", "addedCorrectly, removedCorrectly, noUnexpectedRemoved, noUnexpectedAdded = " + got};
}

Result noop_detector() {
  fs::path root = scratch("noop");
  bool pass = true;
  std::string detail;
  for (TransformId task : kTasks) {
    GenerateConfig cfg;
    cfg.task = task;
    cfg.ratios = {0, 0, 1};
    cfg.tests_dir = kCorpus / "tests";
    cfg.jobs = workers();
    fs::path out = root / std::string(to_string(task));
    CorpusManifest m = generate(kCorpus / "src", out, cfg);
    for (const auto& r : m.records) {
      if (r.status == RecordStatus::Transformed) {
        put(out / "model" / (r.program_id + ".py"), slurp(out / r.input));
      }
    }
    Evaluation ev = evaluate(out / "manifest.jsonl", out / "model", std::nullopt, {}, workers());
    if (ev.rows.size() != 1) {
      pass = false;
      detail += " " + std::string(to_string(task)) + ": no records";
      continue;
    }
    const SummaryRow& row = ev.rows[0];
    char buf[128];
    std::snprintf(buf, sizeof buf, " %s: passed=%.3f passedCorrect=%.3f (n=%zu);", row.task.c_str(),
                  row.fractions[kPassed], row.fractions[kPassedCorrect], row.samples);
    detail += buf;
    pass &= row.fractions[kPassedCorrect] == 0.0 && row.applicable[kPassedCorrect];
  }
  fs::remove_all(root);
  return {pass, detail};
}

Result fixture_table() {
  fs::path dir = kData / "fixture20";
  auto oracle_json = nlohmann::json::parse(slurp(dir / "oracle.json"));
  Evaluation ev = evaluate(dir / "manifest.jsonl", dir / "outputs", std::nullopt, {}, workers());
  bool pass = ev.rows.size() == oracle_json["tasks"].size() && ev.instances.size() == 20;
  double worst = 0;
  for (const auto& row : ev.rows) {
    const auto& want = oracle_json["tasks"][row.task];
    if (want.is_null()) {
      pass = false;
      continue;
    }
    pass &= want["samples"].get<std::size_t>() == row.samples;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      std::string name(metric_name(static_cast<Metric>(m)));
      worst = std::max(worst, std::abs(want["fractions"][name].get<double>() - row.fractions[m]));
      pass &= want["applicable"][name].get<bool>() == row.applicable[m];
    }
  }
  pass &= worst <= 1e-9;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu instances, %zu task rows, max |delta| = %.3g", ev.instances.size(),
                ev.rows.size(), worst);
  return {pass, buf};
}

Result reuse_calls() {
  std::vector<std::string> sources;
  for (const auto& id : corpus_ids()) sources.push_back(slurp(kCorpus / "src" / (id + ".py")));
  for (const auto& e : fs::directory_iterator(kData / "fixture20/original")) {
    if (e.path().filename().string().starts_with("reuse_")) sources.push_back(slurp(e.path()));
  }
  int functions = 0, ok = 0;
  for (const auto& src : sources) {
    TransformResult r = extract_duplicates(SourceTree::parse(src));
    if (r.record.is_identity()) continue;
    SourceTree out = SourceTree::parse(r.tree.text());
    std::set<std::string> defined;
    std::map<std::string, int> calls;
    out.walk(out.root(), [&](NodeId id) {
      const Node& n = out.node(id);
      if (n.kind == NodeKind::FunctionDef) defined.insert(n.text);
      if (n.kind == NodeKind::Call && out.node(n.children[0]).kind == NodeKind::Name) {
        ++calls[out.node(n.children[0]).text];
      }
      return true;
    });
    SourceTree before = SourceTree::parse(src);
    std::set<std::string> existing;
    before.walk(before.root(), [&](NodeId id) {
      if (before.node(id).kind == NodeKind::FunctionDef) existing.insert(before.node(id).text);
      return true;
    });
    for (const auto& name : defined) {
      if (existing.contains(name)) continue;
      ++functions;
      ok += calls[name] >= 2;
    }
  }
  return {functions > 0 && ok == functions,
          std::to_string(ok) + "/" + std::to_string(functions) + " extracted functions have >= 2 call sites"};
}

Result determinism() {
  fs::path root = scratch("determinism");
  bool pass = true;
  std::size_t files = 0;
  for (TransformId task : kTasks) {
    GenerateConfig cfg;
    cfg.task = task;
    cfg.seed = 1234;
    cfg.tests_dir = kCorpus / "tests";
    cfg.jobs = workers();
    std::string name(to_string(task));
    generate(kCorpus / "src", root / (name + "_a"), cfg);
    generate(kCorpus / "src", root / (name + "_b"), cfg);
    auto a = snapshot(root / (name + "_a"));
    pass &= a == snapshot(root / (name + "_b"));
    files += a.size();
  }
  fs::remove_all(root);
  return {pass, std::to_string(files) + " files per run compared byte for byte across 5 tasks"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;  // 0: no limit
    Result (*run)();
  };
  const Criterion criteria[] = {
      {"round-trip", 5, round_trip},
      {"semantics preservation", 60, semantics},
      {"coin game renames only K", 0, coin_game},
      {"diff oracle agreement", 30, diff_oracle},
      {"partial-rename triple", 0, partial_rename_triple},
      {"no-op detector", 0, noop_detector},
      {"fixture table", 10, fixture_table},
      {"reuse call sites", 0, reuse_calls},
      {"determinism", 0, determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& c : criteria) {
    ++n;
    auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = c.limit_s == 0 || secs < c.limit_s;
    bool pass = r.pass && in_time;
    failed += !pass;
    std::printf("%s  %d. %s: %s [%.2f s", pass ? "PASS" : "FAIL", n, c.name, r.detail.c_str(), secs);
    if (c.limit_s > 0) std::printf(", limit %.0f s", c.limit_s);
    std::printf("]\n");
    std::fflush(stdout);
  }
  fs::remove_all(fs::temp_directory_path() / ("restyle_acceptance_" + std::to_string(::getpid())));
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
