#pragma once

// Python source trees with byte-exact spans.
//
// A SourceTree owns the (line-ending normalized) source text, its token
// stream and a flat arena of nodes. Rendering never pretty-prints untouched
// code: edits are applied to the original text through a Rewriter, so every
// statement that no transform touched comes back byte-identical.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace restyle {

struct Position {
  int line = 0;    // 1-based
  int column = 0;  // 0-based, in bytes
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  int line_;
  int column_;
  std::string detail_;
};

/// Thrown when a rewrite produces overlapping edits or unparsable text.
class RenderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class TokenKind : std::uint8_t {
  Name,
  Number,
  String,
  Op,
  Newline,
  Indent,
  Dedent,
  EndMarker,
};

struct Token {
  TokenKind kind;
  std::uint32_t begin;
  std::uint32_t end;
  int line;
  int column;
};

enum class NodeKind : std::uint8_t {
  Module,
  Block,
  // statements
  FunctionDef,
  AsyncFunctionDef,
  ClassDef,
  Decorator,
  Assign,
  AugAssign,
  AnnAssign,
  ExprStmt,
  Return,
  Delete,
  Pass,
  Break,
  Continue,
  Raise,
  Global,
  Nonlocal,
  Assert,
  Import,
  ImportFrom,
  If,
  While,
  For,
  Try,
  With,
  Match,
  // statement parts
  Parameters,
  Param,
  Alias,
  ExceptHandler,
  WithItem,
  MatchCase,
  Pattern,
  // expressions
  Name,
  Attribute,
  Call,
  Keyword,
  Starred,
  DoubleStarred,
  Subscript,
  Slice,
  Number,
  String,
  FormattedValue,
  Constant,
  Tuple,
  List,
  Set,
  Dict,
  DictItem,
  ListComp,
  SetComp,
  DictComp,
  GeneratorExp,
  Comprehension,
  Lambda,
  IfExp,
  BoolOp,
  BinOp,
  UnaryOp,
  Compare,
  Await,
  Yield,
  YieldFrom,
  NamedExpr,
  Empty,
};

std::string_view to_string(NodeKind kind);

enum class ExprContext : std::uint8_t { Load, Store, Del, Decl };

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

namespace node_flags {
inline constexpr std::uint8_t kAsync = 1 << 0;        // For, With, Comprehension
inline constexpr std::uint8_t kInline = 1 << 1;       // Block on the header line
inline constexpr std::uint8_t kFirstOnLine = 1 << 2;  // statement starts its line
inline constexpr std::uint8_t kLastOnLine = 1 << 3;   // statement ends its logical line
inline constexpr std::uint8_t kFString = 1 << 4;      // String with an f prefix
inline constexpr std::uint8_t kBytes = 1 << 5;        // String with a b prefix
inline constexpr std::uint8_t kSelfDoc = 1 << 6;      // FormattedValue using `=`
inline constexpr std::uint8_t kElif = 1 << 7;         // If introduced by `elif`
}  // namespace node_flags

/// Param::text holds the name; Param::param_kind distinguishes markers.
enum class ParamKind : std::uint8_t { Normal, VarArgs, KwArgs, PosOnlyMarker, KwOnlyMarker };

// Child layout by kind (Empty nodes stand in for absent optional parts):
//   Module          statements...
//   Block           statements...
//   FunctionDef     Decorator..., Parameters, returns, Block
//   ClassDef        Decorator..., Call-style arguments..., Block
//   Decorator       expression
//   Assign          targets..., value
//   AugAssign       target, value                   (text = operator)
//   AnnAssign       target, annotation, value
//   ExprStmt/Return/Await/YieldFrom/Starred/DoubleStarred/Decorator  one child
//   Delete          targets...
//   Raise           exception, cause
//   Global/Nonlocal Name(Decl)...
//   Assert          test, message
//   Import          Alias...     ImportFrom  Alias... (text = module)
//   Alias           Name(Store) bound by the import (text = dotted name)
//   If/While        test, Block, orelse Block
//   For             target, iterable, Block, orelse Block
//   Try             Block, ExceptHandler..., orelse Block, finally Block
//   ExceptHandler   type, Name(Store), Block
//   With            WithItem..., Block        WithItem  expression, target
//   Match           subject, MatchCase...     MatchCase pattern, guard, Block
//   Parameters      Param...                  Param     annotation, default
//   Call            function, arguments (expressions, Keyword, Starred, DoubleStarred)
//   Keyword         value (text = argument name)
//   Attribute       value (text = attribute name)
//   Subscript       value, index              Slice     lower, upper, step
//   String          FormattedValue...         FormattedValue  expression, spec fields...
//   Dict            DictItem | DoubleStarred  DictItem  key, value
//   ListComp/SetComp/GeneratorExp  element, Comprehension...
//   DictComp        key, value, Comprehension...
//   Comprehension   target, iterable, conditions...
//   Lambda          Parameters, body          IfExp  body, test, orelse
//   BoolOp/BinOp/UnaryOp/Compare  operands (text = operator(s))
//   NamedExpr       Name(Store), value
//   Pattern         sub-patterns and value expressions; captures are Name(Store)
struct Node {
  NodeKind kind = NodeKind::Empty;
  ExprContext ctx = ExprContext::Load;
  std::uint8_t flags = 0;
  ParamKind param_kind = ParamKind::Normal;
  NodeId parent = kNoNode;
  // Span of the node itself.
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  // Span including any enclosing parentheses (expressions) or, for
  // statements, from the start of the first physical line through the
  // terminating newline.
  std::uint32_t outer_begin = 0;
  std::uint32_t outer_end = 0;
  // Secondary span: the name token of def/class/Keyword/Attribute/Param.
  std::uint32_t name_begin = 0;
  std::uint32_t name_end = 0;
  std::string text;
  std::vector<NodeId> children;

  bool has(std::uint8_t flag) const { return (flags & flag) != 0; }
};

bool is_statement(NodeKind kind);
bool is_function_def(NodeKind kind);

class SourceTree {
 public:
  /// Parses UTF-8 Python source. Line endings are normalized to "\n" and a
  /// leading byte-order mark is dropped. Throws SyntaxError.
  static SourceTree parse(std::string_view source);

  const std::string& text() const { return data_->text; }
  NodeId root() const { return data_->root; }
  const Node& node(NodeId id) const { return data_->nodes[id]; }
  std::size_t node_count() const { return data_->nodes.size(); }
  std::span<const Token> tokens() const { return data_->tokens; }

  Position position(std::uint32_t offset) const;
  std::uint32_t line_start(std::uint32_t offset) const;
  std::string_view slice(std::uint32_t begin, std::uint32_t end) const;
  /// Source text of a node, including enclosing parentheses.
  std::string_view source_of(NodeId id) const;
  /// Leading whitespace of the physical line containing offset.
  std::string_view indentation_at(std::uint32_t offset) const;

  /// Statements of a Module or Block node.
  std::span<const NodeId> statements(NodeId block) const;
  /// The Block holding a compound statement's main body.
  NodeId body_of(NodeId stmt) const;
  std::vector<NodeId> decorators_of(NodeId def) const;

  /// Pre-order traversal; the callback returns false to skip children.
  template <typename Fn>
  void walk(NodeId from, Fn&& fn) const {
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (!fn(id)) continue;
      const auto& kids = node(id).children;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
  }

  /// Offsets of tokens lying inside a multi-line string literal's interior
  /// line starts; used when re-indenting copied code.
  bool line_starts_inside_string(std::uint32_t line_begin) const;

  struct Data {
    std::string text;
    std::vector<std::uint32_t> line_starts;
    std::vector<Token> tokens;
    std::vector<Node> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> multiline_strings;
    NodeId root = kNoNode;
  };

 private:
  explicit SourceTree(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// S-expression dump without spans; two trees are equal up to spans iff
/// their dumps are equal.
std::string dump(const SourceTree& tree, NodeId from);
inline std::string dump(const SourceTree& tree) { return dump(tree, tree.root()); }

/// Text edits against a SourceTree's original text.
class Rewriter {
 public:
  explicit Rewriter(const SourceTree& tree) : tree_(&tree) {}

  void replace(std::uint32_t begin, std::uint32_t end, std::string text);
  void insert(std::uint32_t at, std::string text) { replace(at, at, std::move(text)); }
  void remove(std::uint32_t begin, std::uint32_t end) { replace(begin, end, {}); }

  bool empty() const { return edits_.empty(); }
  std::size_t size() const { return edits_.size(); }

  /// Applies all edits; throws RenderError if two edits overlap.
  std::string apply() const;

 private:
  struct Edit {
    std::uint32_t begin;
    std::uint32_t end;
    std::string text;
    std::size_t order;
  };
  const SourceTree* tree_;
  std::vector<Edit> edits_;
};

/// Renders an unedited tree; byte-identical to the normalized input.
inline const std::string& render(const SourceTree& tree) { return tree.text(); }

/// Applies the rewriter and re-parses, throwing RenderError if the result
/// is not valid source.
SourceTree render_and_reparse(const Rewriter& rewriter);

std::string normalize_newlines(std::string_view source);

bool is_reserved_keyword(std::string_view word);

}  // namespace restyle
