#pragma once

// Reference implementation of the diff-of-diffs score for tests: an exact
// minimal edit script from the full LCS table, then plain counting.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Edits {
  std::map<std::string, int> deleted;
  std::map<std::string, int> inserted;
  int size = 0;
};

// `insert_first` flips the tie-break between an insertion and a deletion
// that are both minimal; used to measure how often the choice matters.
inline Edits minimal_edits(const std::vector<std::string>& a, const std::vector<std::string>& b,
                           bool insert_first = false) {
  const std::size_t n = a.size(), m = b.size();
  // lcs[i][j] = LCS length of a[i..] and b[j..]
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  Edits e;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      ++i;
      ++j;
    } else if (j == m || (i < n && (insert_first ? lcs[i + 1][j] > lcs[i][j + 1] : lcs[i + 1][j] >= lcs[i][j + 1]))) {
      ++e.deleted[a[i++]];
      ++e.size;
    } else {
      ++e.inserted[b[j++]];
      ++e.size;
    }
  }
  return e;
}

inline bool contains(const std::map<std::string, int>& big, const std::map<std::string, int>& small) {
  for (const auto& [k, v] : small) {
    auto it = big.find(k);
    if (it == big.end() || it->second < v) return false;
  }
  return true;
}

struct Score {
  bool removed_correctly, no_unexpected_removed, added_correctly, no_unexpected_added;
  bool operator==(const Score&) const = default;
};

inline Score code_compare(const std::vector<std::string>& input, const std::vector<std::string>& output,
                          const std::vector<std::string>& expected, bool insert_first = false) {
  Edits want = minimal_edits(input, expected, insert_first);
  Edits got = minimal_edits(input, output, insert_first);
  return {contains(got.deleted, want.deleted), contains(want.deleted, got.deleted),
          contains(got.inserted, want.inserted), contains(want.inserted, got.inserted)};
}

}  // namespace oracle
