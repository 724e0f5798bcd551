#pragma once

// Batch generation of parallel corpora from a directory of programs, and
// evaluation of model outputs against them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "restyle/diffcorrect.hpp"
#include "restyle/exec.hpp"
#include "restyle/transforms.hpp"

namespace restyle {

enum class Split : std::uint8_t { Train, Val, Test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Parses "0.8,0.1,0.1". Throws std::invalid_argument unless there are three
/// non-negative numbers summing to 1 (within 1e-9).
SplitRatios parse_split_ratios(std::string_view text);

/// Pure function of (id, seed): FNV-1a of "<seed>:<id>", mixed with
/// splitmix64, mapped to [0, 1) and cut at the cumulative ratios.
Split assign_split(std::string_view program_id, const SplitRatios& ratios, std::uint64_t seed);

enum class RecordStatus : std::uint8_t { Transformed, IdentitySkipped, VerifyFailed, RunFailed, Unreadable };
inline constexpr std::size_t kStatusCount = 5;

std::string_view to_string(RecordStatus status);
std::optional<RecordStatus> parse_status(std::string_view name);

/// One program. Paths are relative to the directory holding the manifest;
/// empty when the file was not written.
struct ManifestRecord {
  std::string program_id;  // path below the source dir, '/'-separated, without ".py"
  TransformId task = TransformId::ListComp;
  std::string original;
  std::string transformed;
  std::string input;     // model input: transformed, or original for reuse
  std::string expected;  // gold: original, or transformed for reuse
  std::vector<std::string> tests;  // ".in" files; ".out" siblings when present
  Split split = Split::Train;
  RecordStatus status = RecordStatus::Unreadable;
  std::string skip_reason;
  std::string verdict;  // equivalence verdict, "untested" when no tests exist
  std::size_t edits = 0;

  bool operator==(const ManifestRecord&) const = default;
};

/// One JSON object per line, keys sorted.
std::string to_json_line(const ManifestRecord& record);
ManifestRecord parse_json_line(std::string_view line);

struct StatusCounts {
  std::array<std::size_t, kStatusCount> by_status{};
  std::size_t total = 0;

  std::size_t operator[](RecordStatus s) const { return by_status[static_cast<std::size_t>(s)]; }
};

struct CorpusManifest {
  std::vector<ManifestRecord> records;  // sorted by program_id

  StatusCounts counts() const;
};

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);
/// Throws std::runtime_error on unreadable files or malformed lines.
CorpusManifest read_manifest(const std::filesystem::path& path);

struct GenerateConfig {
  TransformId task = TransformId::ListComp;
  TransformOptions options;
  std::optional<std::filesystem::path> tests_dir;  // <tests_dir>/<program-id>/*.in
  SplitRatios ratios;
  std::uint64_t seed = 0;
  ExecConfig exec;
  unsigned jobs = 1;
};

/// Transforms every "*.py" below `src_dir` and writes, under `out_dir`:
/// manifest.jsonl, summary.json, original/, transformed/ and tests/. Any
/// earlier contents of those entries are replaced. Per-file problems become
/// record statuses; only an unusable configuration throws.
CorpusManifest generate(const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
                        const GenerateConfig& config);

struct VerifyResult {
  std::string program_id;
  std::string verdict;
  bool tested = false;
  bool equivalent = false;
};

/// Re-runs the equivalence check of every transformed record, with tests
/// taken from `<tests_dir>/<program-id>`.
std::vector<VerifyResult> verify(const std::filesystem::path& manifest_path,
                                 const std::filesystem::path& tests_dir, const ExecConfig& exec = {});

struct EvaluatedInstance {
  std::string program_id;
  TransformId task;
  std::string output_path;  // empty when the output file was missing
  DiffCorrectReport report;
};

struct Evaluation {
  std::vector<EvaluatedInstance> instances;
  std::vector<SummaryRow> rows;  // one per task present, in TransformId order
};

/// Scores `<outputs_dir>/<program-id>.py` for each transformed test-split
/// record. Tests come from `tests_dir` when given, else from the manifest.
/// A missing output scores false on every column.
Evaluation evaluate(const std::filesystem::path& manifest_path, const std::filesystem::path& outputs_dir,
                    const std::optional<std::filesystem::path>& tests_dir = std::nullopt,
                    const ExecConfig& exec = {}, unsigned jobs = 1);

std::string to_json_line(const EvaluatedInstance& instance);

}  // namespace restyle
