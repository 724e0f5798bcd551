#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "restyle/syntax.hpp"

namespace restyle::detail {

struct LexResult {
  std::vector<Token> tokens;
  // [begin, end) of string tokens spanning more than one physical line.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> multiline_strings;
};

class LineTable {
 public:
  explicit LineTable(std::string_view text);
  Position position(std::uint32_t offset) const;
  std::uint32_t line_start(std::uint32_t offset) const;
  const std::vector<std::uint32_t>& starts() const { return starts_; }

 private:
  std::vector<std::uint32_t> starts_;
};

/// Tokenizes a whole module. Comments and non-logical newlines are dropped.
LexResult tokenize_module(std::string_view text, const LineTable& lines);

/// Tokenizes text[begin, end) as a bracketed expression (no NEWLINE or
/// INDENT tokens). Used for f-string replacement fields.
std::vector<Token> tokenize_expression(std::string_view text, std::uint32_t begin,
                                       std::uint32_t end, const LineTable& lines);

/// Length of the string prefix (r, b, f, u and two-letter combinations), or
/// 0 when text[pos..] is not a prefixed string start.
std::size_t string_prefix_length(std::string_view text, std::size_t pos);

}  // namespace restyle::detail
