#pragma once

#include <string>

#include "restyle/transforms.hpp"

namespace restyle::detail {

inline ChangeEdit make_edit(const SourceTree& tree, std::uint32_t begin, std::uint32_t end,
                            int statements, std::string detail) {
  int first = tree.position(begin).line;
  int last = end > begin ? tree.position(end - 1).line : first;
  return {begin, end, first, last, statements, std::move(detail)};
}

inline TransformResult finish(const SourceTree& tree, const Rewriter& rewriter,
                              ChangeRecord record) {
  if (record.edits.empty() || rewriter.empty()) {
    record.edits.clear();
    return {tree, std::move(record)};
  }
  SourceTree out = render_and_reparse(rewriter);
  if (out.text() == tree.text()) {
    record.edits.clear();
    return {tree, std::move(record)};
  }
  return {std::move(out), std::move(record)};
}

/// Text between a statement's end and its terminating newline (spaces and a
/// trailing comment), without the newline itself.
inline std::string_view line_tail(const SourceTree& tree, NodeId stmt) {
  const Node& n = tree.node(stmt);
  std::string_view tail = tree.slice(n.end, n.outer_end);
  if (!tail.empty() && tail.back() == '\n') tail.remove_suffix(1);
  return tail;
}

}  // namespace restyle::detail
