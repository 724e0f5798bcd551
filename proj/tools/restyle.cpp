#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "restyle/corpus.hpp"
#include "restyle/diffcorrect.hpp"

using namespace restyle;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Raised for anything the user has to fix on the command line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<std::string> split_names(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  for (std::string name; std::getline(ss, name, ',');) {
    if (!name.empty()) out.insert(name);
  }
  return out;
}

json report_json(const DiffCorrectReport& r) {
  return {
      {"addedCorrectly", r.compare.added_correctly},
      {"removedCorrectly", r.compare.removed_correctly},
      {"noUnexpectedRemoved", r.compare.no_unexpected_removed},
      {"noUnexpectedAdded", r.compare.no_unexpected_added},
      {"passed", r.passed},
      {"passedCorrect", r.passed_correct},
      {"tested", r.tested},
      {"verdict", r.verdict},
  };
}

json row_json(const SummaryRow& row) {
  json j = {{"task", row.task}, {"samples", row.samples}};
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    std::string name(metric_name(static_cast<Metric>(m)));
    j[name] = row.applicable[m] ? json(row.fractions[m]) : json(nullptr);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Style transforms for Python programs, parallel corpora and diff-based scoring"};
  app.require_subcommand(1);

  ExecConfig exec;
  app.add_option("--python", exec.interpreter, "Interpreter for running programs (default: $RESTYLE_PYTHON or python3)");

  // generate
  auto* gen = app.add_subcommand("generate", "Transform a directory of programs into a parallel corpus");
  std::string task_name, src, out, tests, allowlist, split = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  gen->add_option("--task", task_name, "listcomp, decorator, casing, docstring or reuse")
      ->required()
      ->check(CLI::IsMember({"listcomp", "decorator", "casing", "docstring", "reuse"}));
  gen->add_option("--src", src, "Directory of .py files")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--tests", tests, "Test cases as <DIR>/<program-id>/*.in with optional .out");
  gen->add_option("--allowlist", allowlist, "Comma-separated decorator names to remove");
  gen->add_option("--split", split, "train,val,test ratios");
  gen->add_option("--seed", seed, "Split seed");
  gen->add_option("--timeout", exec.timeout_ms, "Per-run timeout in milliseconds")->check(CLI::PositiveNumber);
  gen->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // verify
  auto* ver = app.add_subcommand("verify", "Re-check equivalence of every transformed record");
  std::string manifest;
  ver->add_option("--manifest", manifest, "manifest.jsonl")->required();
  ver->add_option("--tests", tests, "Test case directory")->required();
  ver->add_option("--timeout", exec.timeout_ms, "Per-run timeout in milliseconds")->check(CLI::PositiveNumber);

  // score
  auto* score = app.add_subcommand("score", "Score one model output");
  std::string input, output, expected;
  score->add_option("--input", input, "Model input program")->required();
  score->add_option("--output", output, "Model output program")->required();
  score->add_option("--expected", expected, "Gold program")->required();
  score->add_option("--tests", tests, "Directory of *.in/*.out test cases");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a directory of model outputs against a manifest");
  std::string outputs;
  eval->add_option("--manifest", manifest, "manifest.jsonl")->required();
  eval->add_option("--outputs", outputs, "Directory of <program-id>.py outputs")->required();
  eval->add_option("--tests", tests, "Test cases overriding the manifest's");
  eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // diff
  auto* diff = app.add_subcommand("diff", "Print the line diff of two files");
  std::string file_a, file_b;
  diff->add_option("--a", file_a, "Old file")->required();
  diff->add_option("--b", file_b, "New file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help exits 0
  }

  try {
    if (*gen) {
      GenerateConfig cfg;
      cfg.task = *parse_transform_id(task_name);
      if (!allowlist.empty()) cfg.options.decorator_allowlist = split_names(allowlist);
      if (!tests.empty()) cfg.tests_dir = tests;
      cfg.ratios = parse_split_ratios(split);
      cfg.seed = seed;
      cfg.exec = exec;
      cfg.jobs = jobs;
      CorpusManifest m = restyle::generate(src, out, cfg);
      StatusCounts c = m.counts();
      std::cout << "task " << task_name << ": " << c.total << " programs\n";
      for (std::size_t s = 0; s < kStatusCount; ++s) {
        std::cout << "  " << to_string(static_cast<RecordStatus>(s)) << " " << c.by_status[s] << "\n";
      }
      std::cout << "manifest: " << (fs::path(out) / "manifest.jsonl").string() << "\n";
    } else if (*ver) {
      auto results = restyle::verify(manifest, tests, exec);
      std::size_t ok = 0, tested = 0;
      for (const auto& r : results) {
        std::cout << r.program_id << "\t" << r.verdict << "\n";
        tested += r.tested;
        ok += r.tested && r.equivalent;
      }
      std::cout << ok << "/" << tested << " tested records equivalent, " << results.size() - tested
                << " untested\n";
    } else if (*score) {
      std::vector<TestCase> cases;
      if (!tests.empty()) {
        if (!fs::is_directory(tests)) throw ConfigError("tests directory " + tests + " not found");
        cases = load_test_cases(tests);
      }
      DiffCorrectReport r = score_instance(read_file(input), read_file(output), read_file(expected), cases, exec);
      json j = report_json(r);
      j["input"] = input;
      j["output"] = output;
      j["expected"] = expected;
      std::cout << j.dump(2) << "\n";
    } else if (*eval) {
      std::optional<fs::path> tests_dir;
      if (!tests.empty()) tests_dir = tests;
      Evaluation ev = restyle::evaluate(manifest, outputs, tests_dir, exec, jobs);
      if (ev.rows.empty()) {
        std::cout << "no transformed test-split records in " << manifest << "\n";
      } else {
        std::cout << format_summary(ev.rows) << "\n";
      }
      for (const auto& inst : ev.instances) std::cout << to_json_line(inst) << "\n";
      for (const auto& row : ev.rows) std::cout << row_json(row).dump() << "\n";
    } else if (*diff) {
      std::cout << format_diff(line_diff(read_file(file_a), read_file(file_b)));
    }
  } catch (const ConfigError& e) {
    std::cerr << "restyle: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "restyle: " << e.what() << "\n";
    return 2;
  } catch (const ExecError& e) {
    std::cerr << "restyle: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "restyle: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
