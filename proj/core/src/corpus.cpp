#include "restyle/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace restyle {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* const kSplitNames[] = {"train", "val", "test"};
const char* const kStatusNames[] = {"transformed", "identity-skipped", "verify-failed", "run-failed",
                                    "unreadable"};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("error reading " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_ratios(const SplitRatios& r) {
  if (!(r.train >= 0 && r.val >= 0 && r.test >= 0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
}

// The ".in" files of a record's copied tests share one directory.
std::vector<TestCase> cases_from_record(const ManifestRecord& r, const fs::path& base) {
  if (r.tests.empty()) return {};
  return load_test_cases((base / r.tests.front()).parent_path().string());
}

std::string verdict_text(const Verdict& v) {
  std::string s(to_string(v));
  if (!v.detail.empty()) s += ": " + v.detail;
  return s;
}

std::string skip_reason_of(const ChangeRecord& record) {
  if (!record.skip_reason.empty()) return record.skip_reason;
  if (record.skipped.empty()) return "no-candidates";
  std::set<std::string> reasons;
  for (const auto& s : record.skipped) reasons.insert(s.reason);
  std::string out;
  for (const auto& r : reasons) out += (out.empty() ? "" : ",") + r;
  return out;
}

struct Job {
  const fs::path& src_dir;
  const fs::path& out_dir;
  const GenerateConfig& config;
};

ManifestRecord process(const Job& job, const std::string& id) {
  const GenerateConfig& config = job.config;
  ManifestRecord rec;
  rec.program_id = id;
  rec.task = config.task;
  rec.split = assign_split(id, config.ratios, config.seed);
  const std::string file = id + ".py";

  std::string source;
  try {
    source = read_file(job.src_dir / file);
  } catch (const std::exception& e) {
    rec.status = RecordStatus::Unreadable;
    rec.skip_reason = e.what();
    return rec;
  }
  rec.original = "original/" + file;
  write_file(job.out_dir / rec.original, source);

  std::vector<TestCase> cases;
  if (config.tests_dir && fs::is_directory(*config.tests_dir / id)) {
    const fs::path from = *config.tests_dir / id;
    cases = load_test_cases(from.string());
    for (const auto& c : cases) {
      std::string rel = "tests/" + id + "/" + c.name + ".in";
      write_file(job.out_dir / rel, c.input);
      if (c.expected_output) {
        write_file(job.out_dir / ("tests/" + id + "/" + c.name + ".out"), *c.expected_output);
      }
      rec.tests.push_back(std::move(rel));
    }
  }

  std::optional<TransformResult> result;
  try {
    result = apply_transform(config.task, SourceTree::parse(source), config.options);
  } catch (const SyntaxError& e) {
    rec.status = RecordStatus::Unreadable;
    rec.skip_reason = std::string("syntax-error: ") + e.what();
    return rec;
  } catch (const RenderError& e) {
    rec.status = RecordStatus::VerifyFailed;
    rec.skip_reason = std::string("render-error: ") + e.what();
    return rec;
  }
  rec.edits = result->record.edits.size();
  const std::string& text = result->tree.text();
  if (result->record.is_identity() || text == source) {
    rec.status = RecordStatus::IdentitySkipped;
    rec.skip_reason = skip_reason_of(result->record);
    return rec;
  }
  rec.transformed = "transformed/" + file;
  write_file(job.out_dir / rec.transformed, text);

  if (cases.empty()) {
    rec.verdict = "untested";
    rec.status = RecordStatus::Transformed;
  } else {
    try {
      Verdict v = equivalent(source, text, cases, config.exec);
      rec.verdict = verdict_text(v);
      rec.status = v.kind == Verdict::Kind::Equivalent ? RecordStatus::Transformed
                   : v.kind == Verdict::Kind::Diverged ? RecordStatus::VerifyFailed
                                                       : RecordStatus::RunFailed;
    } catch (const SpawnFailure& e) {
      rec.status = RecordStatus::RunFailed;
      rec.skip_reason = e.what();
      return rec;
    }
  }
  if (rec.status == RecordStatus::Transformed) {
    bool reverse = config.task == TransformId::Reuse;
    rec.input = reverse ? rec.original : rec.transformed;
    rec.expected = reverse ? rec.transformed : rec.original;
  }
  return rec;
}

std::string summary_json(const CorpusManifest& manifest, const GenerateConfig& config) {
  StatusCounts counts = manifest.counts();
  json j;
  j["task"] = std::string(to_string(config.task));
  j["seed"] = config.seed;
  j["ratios"] = {config.ratios.train, config.ratios.val, config.ratios.test};
  j["total"] = counts.total;
  json by_status = json::object();
  for (std::size_t s = 0; s < kStatusCount; ++s) by_status[kStatusNames[s]] = counts.by_status[s];
  j["counts"] = by_status;
  std::size_t splits[3] = {};
  for (const auto& r : manifest.records) {
    if (r.status == RecordStatus::Transformed) ++splits[static_cast<int>(r.split)];
  }
  j["transformed_by_split"] = {{"train", splits[0]}, {"val", splits[1]}, {"test", splits[2]}};
  return j.dump(2) + "\n";
}

}  // namespace

std::string_view to_string(Split split) { return kSplitNames[static_cast<int>(split)]; }

std::optional<Split> parse_split(std::string_view name) {
  for (int i = 0; i < 3; ++i) {
    if (name == kSplitNames[i]) return static_cast<Split>(i);
  }
  return std::nullopt;
}

SplitRatios parse_split_ratios(std::string_view text) {
  double v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t comma = i < 2 ? text.find(',', pos) : text.size();
    if (comma == std::string_view::npos || (i == 2 && text.find(',', pos) != std::string_view::npos)) {
      throw std::invalid_argument("split ratios need exactly three comma-separated values");
    }
    std::string_view part = text.substr(pos, comma - pos);
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
    if (ec != std::errc() || end != part.data() + part.size()) {
      throw std::invalid_argument("bad split ratio '" + std::string(part) + "'");
    }
    pos = comma + 1;
  }
  SplitRatios r{v[0], v[1], v[2]};
  check_ratios(r);
  return r;
}

Split assign_split(std::string_view program_id, const SplitRatios& ratios, std::uint64_t seed) {
  std::string key = std::to_string(seed) + ":" + std::string(program_id);
  double u = static_cast<double>(splitmix64(fnv1a(key)) >> 11) * 0x1.0p-53;
  if (u < ratios.train) return Split::Train;
  if (u < ratios.train + ratios.val) return Split::Val;
  return Split::Test;
}

std::string_view to_string(RecordStatus status) { return kStatusNames[static_cast<int>(status)]; }

std::optional<RecordStatus> parse_status(std::string_view name) {
  for (std::size_t i = 0; i < kStatusCount; ++i) {
    if (name == kStatusNames[i]) return static_cast<RecordStatus>(i);
  }
  return std::nullopt;
}

std::string to_json_line(const ManifestRecord& r) {
  json j = {
      {"program_id", r.program_id},
      {"task", std::string(to_string(r.task))},
      {"original", r.original},
      {"transformed", r.transformed},
      {"input", r.input},
      {"expected", r.expected},
      {"tests", r.tests},
      {"split", std::string(to_string(r.split))},
      {"status", std::string(to_string(r.status))},
      {"skip_reason", r.skip_reason},
      {"verdict", r.verdict},
      {"edits", r.edits},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ManifestRecord parse_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest line: ") + e.what());
  }
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw std::runtime_error(std::string("manifest record lacks string field '") + key + "'");
    }
    return j[key].get<std::string>();
  };
  ManifestRecord r;
  r.program_id = str("program_id");
  auto task = parse_transform_id(str("task"));
  auto split = parse_split(str("split"));
  auto status = parse_status(str("status"));
  if (!task || !split || !status) throw std::runtime_error("manifest record has unknown task, split or status");
  r.task = *task;
  r.split = *split;
  r.status = *status;
  r.original = str("original");
  r.transformed = str("transformed");
  r.input = str("input");
  r.expected = str("expected");
  r.skip_reason = str("skip_reason");
  r.verdict = str("verdict");
  if (j.contains("tests")) r.tests = j["tests"].get<std::vector<std::string>>();
  if (j.contains("edits")) r.edits = j["edits"].get<std::size_t>();
  return r;
}

StatusCounts CorpusManifest::counts() const {
  StatusCounts c;
  for (const auto& r : records) ++c.by_status[static_cast<std::size_t>(r.status)];
  c.total = records.size();
  return c;
}

void write_manifest(const fs::path& path, const CorpusManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) out += to_json_line(r) + "\n";
  write_file(path, out);
}

CorpusManifest read_manifest(const fs::path& path) {
  std::istringstream in(read_file(path));
  CorpusManifest m;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      m.records.push_back(parse_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return m;
}

CorpusManifest generate(const fs::path& src_dir, const fs::path& out_dir, const GenerateConfig& config) {
  check_ratios(config.ratios);
  if (!fs::is_directory(src_dir)) throw std::invalid_argument("source directory " + src_dir.string() + " not found");
  if (config.tests_dir && !fs::is_directory(*config.tests_dir)) {
    throw std::invalid_argument("tests directory " + config.tests_dir->string() + " not found");
  }
  if (config.task == TransformId::Decorator && config.options.decorator_allowlist.empty()) {
    throw std::invalid_argument("decorator allowlist is empty");
  }
  if (config.tests_dir) resolve_interpreter(config.exec);

  std::vector<std::string> ids;
  for (const auto& entry : fs::recursive_directory_iterator(src_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".py") continue;
    std::string rel = fs::relative(entry.path(), src_dir).generic_string();
    ids.push_back(rel.substr(0, rel.size() - 3));
  }
  std::sort(ids.begin(), ids.end());

  fs::create_directories(out_dir);
  for (const char* owned : {"original", "transformed", "tests", "manifest.jsonl", "summary.json"}) {
    fs::remove_all(out_dir / owned);
  }

  CorpusManifest manifest;
  manifest.records.resize(ids.size());
  Job job{src_dir, out_dir, config};
  parallel_for(ids.size(), config.jobs, [&](std::size_t i) { manifest.records[i] = process(job, ids[i]); });

  write_manifest(out_dir / "manifest.jsonl", manifest);
  write_file(out_dir / "summary.json", summary_json(manifest, config));
  return manifest;
}

std::vector<VerifyResult> verify(const fs::path& manifest_path, const fs::path& tests_dir,
                                 const ExecConfig& exec) {
  CorpusManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<VerifyResult> out;
  for (const auto& r : m.records) {
    if (r.status != RecordStatus::Transformed) continue;
    VerifyResult v{r.program_id, "untested", false, false};
    auto cases = fs::is_directory(tests_dir / r.program_id)
                     ? load_test_cases((tests_dir / r.program_id).string())
                     : std::vector<TestCase>{};
    if (!cases.empty()) {
      Verdict verdict = equivalent(read_file(base / r.original), read_file(base / r.transformed), cases, exec);
      v.tested = true;
      v.equivalent = verdict.equivalent();
      v.verdict = verdict_text(verdict);
    }
    out.push_back(std::move(v));
  }
  return out;
}

Evaluation evaluate(const fs::path& manifest_path, const fs::path& outputs_dir,
                    const std::optional<fs::path>& tests_dir, const ExecConfig& exec, unsigned jobs) {
  if (!fs::is_directory(outputs_dir)) throw std::invalid_argument("outputs directory " + outputs_dir.string() + " not found");
  CorpusManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<const ManifestRecord*> todo;
  for (const auto& r : m.records) {
    if (r.status == RecordStatus::Transformed && r.split == Split::Test) todo.push_back(&r);
  }
  if (!todo.empty() && (tests_dir || std::any_of(todo.begin(), todo.end(), [](auto* r) { return !r->tests.empty(); }))) {
    resolve_interpreter(exec);
  }

  Evaluation ev;
  ev.instances.resize(todo.size());
  parallel_for(todo.size(), jobs, [&](std::size_t i) {
    const ManifestRecord& r = *todo[i];
    EvaluatedInstance& inst = ev.instances[i];
    inst.program_id = r.program_id;
    inst.task = r.task;
    std::string input = read_file(base / r.input);
    std::string expected = read_file(base / r.expected);
    std::vector<TestCase> cases;
    if (tests_dir) {
      if (fs::is_directory(*tests_dir / r.program_id)) cases = load_test_cases((*tests_dir / r.program_id).string());
    } else {
      cases = cases_from_record(r, base);
    }
    fs::path output = outputs_dir / (r.program_id + ".py");
    if (!fs::is_regular_file(output)) {
      inst.report = make_report(input, expected, expected);
      inst.report.compare = {false, false, false, false};
      inst.report.tested = !cases.empty();
      inst.report.verdict = "missing-output";
      return;
    }
    inst.output_path = output.string();
    inst.report = score_instance(input, read_file(output), expected, cases, exec);
  });

  std::map<TransformId, std::vector<DiffCorrectReport>> by_task;
  for (const auto& inst : ev.instances) by_task[inst.task].push_back(inst.report);
  for (auto& [task, reports] : by_task) ev.rows.push_back(aggregate(reports, std::string(to_string(task))));
  return ev;
}

std::string to_json_line(const EvaluatedInstance& inst) {
  const DiffCorrectReport& r = inst.report;
  json j = {
      {"program_id", inst.program_id},
      {"task", std::string(to_string(inst.task))},
      {"output", inst.output_path},
      {"addedCorrectly", r.compare.added_correctly},
      {"removedCorrectly", r.compare.removed_correctly},
      {"noUnexpectedRemoved", r.compare.no_unexpected_removed},
      {"noUnexpectedAdded", r.compare.no_unexpected_added},
      {"passed", r.passed},
      {"passedCorrect", r.passed_correct},
      {"tested", r.tested},
      {"verdict", r.verdict},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace restyle
