#pragma once

// Line diffs and the four-boolean diff-of-diffs score for restyled code.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "restyle/exec.hpp"

namespace restyle {

enum class DiffTag : std::uint8_t { Keep, Delete, Insert };

struct DiffLine {
  DiffTag tag;
  std::string text;
};

using DiffScript = std::vector<DiffLine>;

/// Lines of `text` with trailing whitespace removed. A final line without a
/// newline counts; the empty string after a final newline does not.
std::vector<std::string> split_lines(std::string_view text);

/// Minimal (delete + insert count) line edit script, from Myers' O(ND)
/// search. Among minimal scripts the result is fixed: reading from the top,
/// a matching pair of lines is kept whenever possible, and a deletion comes
/// before an insertion whenever both stay minimal.
DiffScript line_diff(std::string_view a, std::string_view b);
DiffScript line_diff(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Unified-style rendering: "  ", "- " or "+ " before each line.
std::string format_diff(const DiffScript& script);

using LineMultiset = std::map<std::string, std::size_t>;

/// Lines deleted (or inserted) by a script, as a multiset.
LineMultiset deleted_lines(const DiffScript& script);
LineMultiset inserted_lines(const DiffScript& script);

/// a - b with multiplicities.
LineMultiset multiset_difference(const LineMultiset& a, const LineMultiset& b);

struct CodeCompare {
  bool removed_correctly = true;
  bool no_unexpected_removed = true;
  bool added_correctly = true;
  bool no_unexpected_added = true;

  bool all() const {
    return removed_correctly && no_unexpected_removed && added_correctly && no_unexpected_added;
  }
  bool operator==(const CodeCompare&) const = default;
};

/// Compares the edits input->output against the edits input->expected.
CodeCompare code_compare(std::string_view input, std::string_view output, std::string_view expected);

struct DiffCorrectReport {
  CodeCompare compare;
  bool tested = false;  // passed is meaningful only when tests ran
  bool passed = false;
  bool passed_correct = false;
  std::size_t expected_removals = 0;
  std::size_t expected_additions = 0;
  std::string verdict;  // exec verdict text, or why the instance failed
};

DiffCorrectReport make_report(std::string_view input, std::string_view output,
                              std::string_view expected);

/// code_compare plus functional tests: the output passes when it matches
/// each case's expected stdout, or the expected program's output when a
/// case has none.
DiffCorrectReport score_instance(std::string_view input, std::string_view output,
                                 std::string_view expected, const std::vector<TestCase>& cases,
                                 const ExecConfig& config = {});

enum Metric : std::size_t {
  kAddedCorrectly,
  kRemovedCorrectly,
  kNoUnexpectedRemoved,
  kNoUnexpectedAdded,
  kPassed,
  kPassedCorrect,
  kMetricCount,
};

std::string_view metric_name(Metric m);

struct SummaryRow {
  std::string task;
  std::size_t samples = 0;
  std::array<std::size_t, kMetricCount> counts{};
  std::array<double, kMetricCount> fractions{};
  /// False where the column is vacuous: no instance expected removals (or
  /// additions), or no instance was tested.
  std::array<bool, kMetricCount> applicable{};
};

/// Per-column fraction of true values. Throws std::invalid_argument when
/// `reports` is empty.
SummaryRow aggregate(const std::vector<DiffCorrectReport>& reports, std::string task);

/// Aligned text table, "-" for inapplicable columns.
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace restyle
