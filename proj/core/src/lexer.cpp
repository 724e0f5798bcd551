#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace restyle::detail {

LineTable::LineTable(std::string_view text) {
  starts_.push_back(0);
  for (std::uint32_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') starts_.push_back(i + 1);
  }
}

Position LineTable::position(std::uint32_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  auto line = static_cast<int>(it - starts_.begin());
  return {line, static_cast<int>(offset - starts_[line - 1])};
}

std::uint32_t LineTable::line_start(std::uint32_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return *(it - 1);
}

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 5> kOps3 = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 19> kOps2 = {"**", "//", ">>", "<<", "<=", ">=", "==",
                                                    "!=", "->", "+=", "-=", "*=", "/=", "%=",
                                                    "&=", "|=", "^=", "@=", ":="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:;.=";

class Lexer {
 public:
  Lexer(std::string_view text, std::uint32_t begin, std::uint32_t end, const LineTable& lines,
        bool expression_mode)
      : text_(text), pos_(begin), end_(end), lines_(lines), expression_mode_(expression_mode) {
    if (expression_mode_) depth_ = 1;
  }

  LexResult run() {
    indents_.push_back({0, 0});
    at_line_start_ = !expression_mode_;
    while (true) {
      if (at_line_start_) {
        if (!handle_indentation()) break;
        continue;
      }
      skip_inline_space();
      if (pos_ >= end_) break;
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < end_ && text_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\\') {
        if (pos_ + 1 < end_ && text_[pos_ + 1] == '\n') {
          pos_ += 2;
          continue;
        }
        if (pos_ + 1 >= end_) fail(pos_, "unexpected EOF after line continuation");
        fail(pos_, "unexpected character after line continuation character");
      }
      if (c == '\n') {
        if (depth_ > 0) {
          ++pos_;
          continue;
        }
        push(TokenKind::Newline, pos_, pos_ + 1);
        ++pos_;
        at_line_start_ = true;
        continue;
      }
      lex_token();
    }
    if (!expression_mode_) {
      if (depth_ > 0) fail(open_brackets_.back(), "'(' was never closed");
      if (!result_.tokens.empty() && result_.tokens.back().kind != TokenKind::Newline &&
          result_.tokens.back().kind != TokenKind::Dedent) {
        push(TokenKind::Newline, end_, end_);
      }
      while (indents_.size() > 1) {
        indents_.pop_back();
        push(TokenKind::Dedent, end_, end_);
      }
    }
    push(TokenKind::EndMarker, end_, end_);
    return std::move(result_);
  }

 private:
  struct Indent {
    int col8;
    int col1;
  };

  [[noreturn]] void fail(std::uint32_t offset, const std::string& message) const {
    auto p = lines_.position(offset);
    throw SyntaxError(p.line, p.column, message);
  }

  void push(TokenKind kind, std::uint32_t b, std::uint32_t e) {
    auto p = lines_.position(b);
    result_.tokens.push_back({kind, b, e, p.line, p.column});
  }

  void skip_inline_space() {
    while (pos_ < end_ && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\f' ||
                           (expression_mode_ && text_[pos_] == '\n'))) {
      ++pos_;
    }
  }

  // Returns false at end of input.
  bool handle_indentation() {
    at_line_start_ = false;
    int col8 = 0;
    int col1 = 0;
    std::uint32_t p = pos_;
    while (p < end_) {
      char c = text_[p];
      if (c == ' ') {
        ++col8;
        ++col1;
      } else if (c == '\t') {
        col8 = (col8 / 8 + 1) * 8;
        ++col1;
      } else if (c == '\f') {
        col8 = col1 = 0;
      } else {
        break;
      }
      ++p;
    }
    if (p >= end_) {
      pos_ = p;
      return false;
    }
    char c = text_[p];
    if (c == '#' || c == '\n' || (c == '\\' && p + 1 < end_ && text_[p + 1] == '\n')) {
      // blank or comment-only line; a lone continuation joins the next line
      pos_ = p;
      if (c == '#') {
        while (pos_ < end_ && text_[pos_] != '\n') ++pos_;
      }
      if (c == '\\') {
        pos_ += 2;
        return true;
      }
      if (pos_ < end_) ++pos_;
      at_line_start_ = true;
      return true;
    }
    pos_ = p;
    const Indent& top = indents_.back();
    if (col8 > top.col8) {
      if (col1 <= top.col1) fail(p, "inconsistent use of tabs and spaces in indentation");
      indents_.push_back({col8, col1});
      push(TokenKind::Indent, p, p);
    } else if (col8 < top.col8) {
      while (indents_.size() > 1 && col8 < indents_.back().col8) {
        indents_.pop_back();
        push(TokenKind::Dedent, p, p);
      }
      if (col8 != indents_.back().col8) {
        fail(p, "unindent does not match any outer indentation level");
      }
      if (col1 != indents_.back().col1) fail(p, "inconsistent use of tabs and spaces in indentation");
    } else if (col1 != top.col1) {
      fail(p, "inconsistent use of tabs and spaces in indentation");
    }
    return true;
  }

  void lex_token() {
    std::uint32_t start = pos_;
    auto c = static_cast<unsigned char>(text_[pos_]);
    if (std::size_t prefix = string_prefix_length(text_.substr(0, end_), pos_); prefix > 0) {
      lex_string(start, prefix);
      return;
    }
    if (c == '"' || c == '\'') {
      lex_string(start, 0);
      return;
    }
    if (is_ident_start(c)) {
      while (pos_ < end_ && is_ident_char(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      push(TokenKind::Name, start, pos_);
      return;
    }
    if (std::isdigit(c) ||
        (c == '.' && pos_ + 1 < end_ && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      lex_number();
      push(TokenKind::Number, start, pos_);
      return;
    }
    std::string_view rest = text_.substr(pos_, end_ - pos_);
    for (auto op : kOps3) {
      if (rest.starts_with(op)) {
        pos_ += 3;
        push(TokenKind::Op, start, pos_);
        return;
      }
    }
    for (auto op : kOps2) {
      if (rest.starts_with(op)) {
        pos_ += 2;
        push(TokenKind::Op, start, pos_);
        return;
      }
    }
    if (kOps1.find(static_cast<char>(c)) != std::string_view::npos) {
      if (c == '(' || c == '[' || c == '{') {
        ++depth_;
        open_brackets_.push_back(pos_);
        closers_.push_back(c == '(' ? ')' : c == '[' ? ']' : '}');
      } else if (c == ')' || c == ']' || c == '}') {
        if (closers_.empty()) fail(pos_, std::string("unmatched '") + static_cast<char>(c) + "'");
        if (closers_.back() != c) {
          fail(pos_, std::string("closing parenthesis '") + static_cast<char>(c) +
                         "' does not match opening parenthesis");
        }
        closers_.pop_back();
        open_brackets_.pop_back();
        --depth_;
      }
      ++pos_;
      push(TokenKind::Op, start, pos_);
      return;
    }
    fail(pos_, "invalid character in identifier");
  }

  void lex_number() {
    auto digit_run = [&](auto pred) {
      while (pos_ < end_ && (pred(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
    };
    auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    if (text_[pos_] == '0' && pos_ + 1 < end_) {
      char n = static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_ + 1])));
      if (n == 'x') {
        pos_ += 2;
        digit_run([](unsigned char ch) { return std::isxdigit(ch) != 0; });
        return;
      }
      if (n == 'o' || n == 'b') {
        pos_ += 2;
        digit_run(is_dec);
        return;
      }
    }
    digit_run(is_dec);
    if (pos_ < end_ && text_[pos_] == '.') {
      ++pos_;
      digit_run(is_dec);
    }
    if (pos_ < end_ && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::uint32_t save = pos_;
      ++pos_;
      if (pos_ < end_ && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < end_ && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digit_run(is_dec);
      } else {
        pos_ = save;
      }
    }
    if (pos_ < end_ && (text_[pos_] == 'j' || text_[pos_] == 'J')) ++pos_;
  }

  void lex_string(std::uint32_t start, std::size_t prefix_len) {
    pos_ = start + static_cast<std::uint32_t>(prefix_len);
    char quote = text_[pos_];
    bool triple = pos_ + 2 < end_ && text_[pos_ + 1] == quote && text_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    bool spans_lines = false;
    while (true) {
      if (pos_ >= end_) {
        fail(start, triple ? "unterminated triple-quoted string literal"
                           : "unterminated string literal");
      }
      char c = text_[pos_];
      if (c == '\\') {
        // raw strings still cannot end in an odd backslash
        if (pos_ + 1 < end_ && text_[pos_ + 1] == '\n') spans_lines = true;
        pos_ += 2;
        continue;
      }
      if (c == '\n') {
        if (!triple) fail(start, "unterminated string literal");
        spans_lines = true;
      }
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < end_ && text_[pos_ + 1] == quote && text_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    if (pos_ > end_) fail(start, "unterminated string literal");
    push(TokenKind::String, start, pos_);
    if (spans_lines) result_.multiline_strings.emplace_back(start, pos_);
  }

  std::string_view text_;
  std::uint32_t pos_;
  std::uint32_t end_;
  const LineTable& lines_;
  bool expression_mode_;
  bool at_line_start_ = false;
  int depth_ = 0;
  std::vector<Indent> indents_;
  std::vector<std::uint32_t> open_brackets_;
  std::vector<char> closers_;
  LexResult result_;
};

}  // namespace

std::size_t string_prefix_length(std::string_view text, std::size_t pos) {
  auto lower = [&](std::size_t i) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
  };
  auto is_quote = [&](std::size_t i) { return i < text.size() && (text[i] == '"' || text[i] == '\''); };
  if (pos >= text.size()) return 0;
  if (pos > 0 && is_ident_char(static_cast<unsigned char>(text[pos - 1]))) return 0;
  char a = lower(pos);
  if (a != 'r' && a != 'b' && a != 'u' && a != 'f') return 0;
  if (is_quote(pos + 1)) return 1;
  if (pos + 1 >= text.size()) return 0;
  char b = lower(pos + 1);
  bool pair = (a == 'r' && (b == 'b' || b == 'f')) || (b == 'r' && (a == 'b' || a == 'f'));
  if (pair && is_quote(pos + 2)) return 2;
  return 0;
}

LexResult tokenize_module(std::string_view text, const LineTable& lines) {
  return Lexer(text, 0, static_cast<std::uint32_t>(text.size()), lines, false).run();
}

std::vector<Token> tokenize_expression(std::string_view text, std::uint32_t begin,
                                       std::uint32_t end, const LineTable& lines) {
  return Lexer(text, begin, end, lines, true).run().tokens;
}

}  // namespace restyle::detail
