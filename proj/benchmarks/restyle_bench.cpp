#include <benchmark/benchmark.h>

#include <random>

#include "restyle/diffcorrect.hpp"
#include "restyle/scope.hpp"
#include "restyle/transforms.hpp"

using namespace restyle;

namespace {

// `n` functions, each a loop with a comprehension and a couple of statements
// that recur across functions so clone search has work to do.
std::string synthetic_program(int n) {
  std::string src = "import sys\nfrom functools import lru_cache\n\n";
  for (int i = 0; i < n; ++i) {
    std::string f = "f" + std::to_string(i);
    src += "@lru_cache(maxsize=None)\n";
    src += "def " + f + "(Limit, step):\n";
    src += "    \"\"\"Function " + std::to_string(i) + ".\"\"\"\n";
    src += "    acc = 0\n";
    src += "    for k in range(Limit):\n";
    src += "        acc += k * step\n";
    src += "    vals = [v * " + std::to_string(i % 7) + " for v in range(Limit) if v % 2]\n";
    src += "    total = acc + sum(vals)\n";
    src += "    print(total, file=sys.stderr)\n";
    src += "    return total\n\n";
  }
  src += "print(f0(10, 2))\n";
  return src;
}

std::string random_text(std::mt19937& rng, int lines) {
  std::uniform_int_distribution<int> sym(0, 15);
  std::string s;
  for (int i = 0; i < lines; ++i) s += "line " + std::to_string(sym(rng)) + "\n";
  return s;
}

void BM_Parse(benchmark::State& state) {
  std::string src = synthetic_program(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(SourceTree::parse(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse)->Arg(10)->Arg(100)->Arg(1000);

void BM_ScopeTable(benchmark::State& state) {
  SourceTree tree = SourceTree::parse(synthetic_program(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(ScopeTable::build(tree));
}
BENCHMARK(BM_ScopeTable)->Arg(10)->Arg(100)->Arg(1000);

void BM_Transform(benchmark::State& state) {
  SourceTree tree = SourceTree::parse(synthetic_program(100));
  auto id = static_cast<TransformId>(state.range(0));
  state.SetLabel(std::string(to_string(id)));
  for (auto _ : state) benchmark::DoNotOptimize(apply_transform(id, tree));
}
BENCHMARK(BM_Transform)->DenseRange(0, 4);

void BM_ReuseCandidates(benchmark::State& state) {
  SourceTree tree = SourceTree::parse(synthetic_program(static_cast<int>(state.range(0))));
  ScopeTable table = ScopeTable::build(tree);
  for (auto _ : state) benchmark::DoNotOptimize(reuse_candidates(tree, table));
}
BENCHMARK(BM_ReuseCandidates)->Arg(10)->Arg(100)->Arg(400);

void BM_LineDiff(benchmark::State& state) {
  std::mt19937 rng(1);
  int n = static_cast<int>(state.range(0));
  std::string a = random_text(rng, n), b = random_text(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(line_diff(a, b));
}
BENCHMARK(BM_LineDiff)->Arg(20)->Arg(200)->Arg(2000);

void BM_CodeCompare(benchmark::State& state) {
  std::mt19937 rng(2);
  int n = static_cast<int>(state.range(0));
  std::string in = random_text(rng, n), out = random_text(rng, n), ex = random_text(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(code_compare(in, out, ex));
}
BENCHMARK(BM_CodeCompare)->Arg(20)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
