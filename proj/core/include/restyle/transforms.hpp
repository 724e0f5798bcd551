#pragma once

// The five style transforms. Each one is a pure function from a tree to a
// new tree plus a record of what changed; untouched statements keep their
// original bytes.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "restyle/scope.hpp"
#include "restyle/syntax.hpp"

namespace restyle {

enum class TransformId : std::uint8_t { ListComp, Decorator, Casing, Docstring, Reuse };

std::string_view to_string(TransformId id);
std::optional<TransformId> parse_transform_id(std::string_view name);

struct ChangeEdit {
  std::uint32_t begin;  // byte span in the original text
  std::uint32_t end;
  int first_line;       // 1-based lines of that span
  int last_line;
  int replacement_statements;
  std::string detail;
};

/// Something a transform looked at and deliberately left alone.
struct ChangeSkip {
  std::string subject;
  std::string reason;
};

struct ChangeRecord {
  TransformId transform;
  std::vector<ChangeEdit> edits;
  std::vector<ChangeSkip> skipped;
  std::string skip_reason;  // set when the whole program was left alone

  bool is_identity() const { return edits.empty(); }
};

struct TransformResult {
  SourceTree tree;
  ChangeRecord record;
};

const std::set<std::string>& default_decorator_allowlist();

TransformResult comprehension_to_loop(const SourceTree& tree);
TransformResult strip_decorators(const SourceTree& tree,
                                 const std::set<std::string>& allowlist = default_decorator_allowlist());
TransformResult lowercase_variables(const SourceTree& tree);
TransformResult strip_docstrings(const SourceTree& tree);
TransformResult extract_duplicates(const SourceTree& tree);

struct TransformOptions {
  std::set<std::string> decorator_allowlist = default_decorator_allowlist();
};

TransformResult apply_transform(TransformId id, const SourceTree& tree,
                                const TransformOptions& options = {});

/// A contiguous run of two or more statements inside a function body that
/// could be moved into a new module-level function.
struct ReuseCandidate {
  NodeId function;  // innermost enclosing def
  NodeId block;
  std::size_t first;  // statement indices within block, inclusive
  std::size_t last;
  std::uint32_t begin;  // byte span from the first statement to the end of the last
  std::uint32_t end;
  std::string canonical;
  std::vector<std::string> parameters;  // names in this occurrence, ordered by first use
  std::optional<std::string> live_out;
  bool extractable;  // false when its data flow rules out a call (two live-outs, unbound input)
};

/// Every window whose canonical form occurs at least twice, grouped by
/// canonical form.
std::vector<ReuseCandidate> reuse_candidates(const SourceTree& tree, const ScopeTable& table);

}  // namespace restyle
