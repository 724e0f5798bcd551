#include "restyle/diffcorrect.hpp"

#include <algorithm>
#include <cstdio>

namespace restyle {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    std::size_t keep = line.find_last_not_of(" \t\r\f\v");
    lines.emplace_back(line.substr(0, keep == std::string_view::npos ? 0 : keep + 1));
    pos = eol + 1;
  }
  return lines;
}

DiffScript line_diff(std::string_view a, std::string_view b) {
  return line_diff(split_lines(a), split_lines(b));
}

namespace {

// Distances to the end of both sequences, answered from Myers' search run
// backwards: rounds[d][k] is the furthest point on diagonal k (in reversed
// coordinates) reachable with d edits from the end. Along a diagonal the
// distance never decreases, so "within d edits" is a prefix test.
class DistanceToEnd {
 public:
  DistanceToEnd(const std::vector<std::string>& a, const std::vector<std::string>& b)
      : n_(static_cast<int>(a.size())), m_(static_cast<int>(b.size())), offset_(n_ + m_ + 1) {
    std::vector<int> v(2 * (n_ + m_) + 3, 0);
    for (int d = 0; d <= n_ + m_; ++d) {
      bool done = false;
      for (int k = -d; k <= d; k += 2) {
        bool down = k == -d || (k != d && v[offset_ + k - 1] < v[offset_ + k + 1]);
        int x = down ? v[offset_ + k + 1] : v[offset_ + k - 1] + 1;
        int y = x - k;
        while (x < n_ && y < m_ && a[n_ - 1 - x] == b[m_ - 1 - y]) {
          ++x;
          ++y;
        }
        v[offset_ + k] = x;
        if (x >= n_ && y >= m_) done = true;
      }
      rounds_.push_back(v);
      if (done) break;
    }
  }

  int total() const { return static_cast<int>(rounds_.size()) - 1; }

  // Edits needed from (i, j) to (n, m).
  int operator()(int i, int j) const {
    int x = n_ - i;
    int k = x - (m_ - j);
    int lo = k < 0 ? -k : k;
    int hi = total();
    if ((hi - lo) % 2 != 0) --hi;
    // Off the optimal paths a point can be further away than the whole
    // search went; those only need to compare as "too far".
    if (lo > hi || rounds_[hi][offset_ + k] < x) return n_ + m_ + 1;
    // smallest d in [lo, hi] with d = k mod 2 and rounds_[d][k] >= x
    while (lo < hi) {
      int mid = lo + ((hi - lo) / 2 & ~1);
      if (rounds_[mid][offset_ + k] >= x) {
        hi = mid;
      } else {
        lo = mid + 2;
      }
    }
    return lo;
  }

 private:
  int n_;
  int m_;
  int offset_;
  std::vector<std::vector<int>> rounds_;
};

}  // namespace

DiffScript line_diff(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // Of all minimal scripts, take the one that keeps a matching line as soon
  // as possible, and otherwise deletes before it inserts.
  DistanceToEnd dist(a, b);
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  DiffScript out;
  int i = 0;
  int j = 0;
  int remaining = dist.total();
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      out.push_back({DiffTag::Keep, a[i]});
      ++i;
      ++j;
    } else if (i < n && (j == m || dist(i + 1, j) == remaining - 1)) {
      out.push_back({DiffTag::Delete, a[i]});
      ++i;
      --remaining;
    } else {
      out.push_back({DiffTag::Insert, b[j]});
      ++j;
      --remaining;
    }
  }
  return out;
}

std::string format_diff(const DiffScript& script) {
  std::string out;
  for (const auto& line : script) {
    out += line.tag == DiffTag::Keep ? "  " : line.tag == DiffTag::Delete ? "- " : "+ ";
    out += line.text;
    out += '\n';
  }
  return out;
}

namespace {

LineMultiset collect(const DiffScript& script, DiffTag tag) {
  LineMultiset out;
  for (const auto& line : script) {
    if (line.tag == tag) ++out[line.text];
  }
  return out;
}

std::size_t total(const LineMultiset& m) {
  std::size_t n = 0;
  for (const auto& [line, count] : m) n += count;
  return n;
}

}  // namespace

LineMultiset deleted_lines(const DiffScript& script) { return collect(script, DiffTag::Delete); }
LineMultiset inserted_lines(const DiffScript& script) { return collect(script, DiffTag::Insert); }

LineMultiset multiset_difference(const LineMultiset& a, const LineMultiset& b) {
  LineMultiset out;
  for (const auto& [line, count] : a) {
    auto it = b.find(line);
    std::size_t other = it == b.end() ? 0 : it->second;
    if (count > other) out[line] = count - other;
  }
  return out;
}

CodeCompare code_compare(std::string_view input, std::string_view output, std::string_view expected) {
  auto in = split_lines(input);
  DiffScript want = line_diff(in, split_lines(expected));
  DiffScript got = line_diff(in, split_lines(output));
  LineMultiset er = deleted_lines(want);
  LineMultiset ar = deleted_lines(got);
  LineMultiset ea = inserted_lines(want);
  LineMultiset aa = inserted_lines(got);
  return {multiset_difference(er, ar).empty(), multiset_difference(ar, er).empty(),
          multiset_difference(ea, aa).empty(), multiset_difference(aa, ea).empty()};
}

DiffCorrectReport make_report(std::string_view input, std::string_view output,
                              std::string_view expected) {
  DiffCorrectReport r;
  r.compare = code_compare(input, output, expected);
  DiffScript want = line_diff(input, expected);
  r.expected_removals = total(deleted_lines(want));
  r.expected_additions = total(inserted_lines(want));
  return r;
}

DiffCorrectReport score_instance(std::string_view input, std::string_view output,
                                 std::string_view expected, const std::vector<TestCase>& cases,
                                 const ExecConfig& config) {
  DiffCorrectReport r = make_report(input, output, expected);
  if (cases.empty()) return r;
  r.tested = true;
  Verdict v = equivalent(expected, output, cases, config);
  r.passed = v.equivalent();
  r.verdict = to_string(v);
  if (!v.detail.empty()) r.verdict += ": " + v.detail;
  r.passed_correct = r.passed && r.compare.all();
  return r;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case kAddedCorrectly: return "addedCorrectly";
    case kRemovedCorrectly: return "removedCorrectly";
    case kNoUnexpectedRemoved: return "noUnexpectedRemoved";
    case kNoUnexpectedAdded: return "noUnexpectedAdded";
    case kPassed: return "passed";
    case kPassedCorrect: return "passedCorrect";
    case kMetricCount: break;
  }
  return "?";
}

SummaryRow aggregate(const std::vector<DiffCorrectReport>& reports, std::string task) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports for task " + task);
  SummaryRow row;
  row.task = std::move(task);
  row.samples = reports.size();
  row.applicable = {false, false, true, true, false, false};
  for (const auto& r : reports) {
    const bool values[kMetricCount] = {r.compare.added_correctly,      r.compare.removed_correctly,
                                       r.compare.no_unexpected_removed, r.compare.no_unexpected_added,
                                       r.passed,                        r.passed_correct};
    for (std::size_t m = 0; m < kMetricCount; ++m) row.counts[m] += values[m] ? 1 : 0;
    if (r.expected_additions > 0) row.applicable[kAddedCorrectly] = true;
    if (r.expected_removals > 0) row.applicable[kRemovedCorrectly] = true;
    if (r.tested) row.applicable[kPassed] = row.applicable[kPassedCorrect] = true;
  }
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    row.fractions[m] = static_cast<double>(row.counts[m]) / static_cast<double>(row.samples);
  }
  return row;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> header = {"task"};
  for (std::size_t m = 0; m < kMetricCount; ++m) header.emplace_back(metric_name(static_cast<Metric>(m)));
  header.emplace_back("n");
  std::vector<std::vector<std::string>> table = {header};
  for (const auto& row : rows) {
    std::vector<std::string> cells = {row.task};
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      if (!row.applicable[m]) {
        cells.emplace_back("-");
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", row.fractions[m]);
      cells.emplace_back(buf);
    }
    cells.push_back(std::to_string(row.samples));
    table.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out += "  ";
      std::string pad(width[c] - r[c].size(), ' ');
      out += c == 0 ? r[c] + pad : pad + r[c];
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

}  // namespace restyle
