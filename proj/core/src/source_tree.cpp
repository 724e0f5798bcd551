#include <algorithm>

#include "restyle/syntax.hpp"

namespace restyle {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Module: return "Module";
    case NodeKind::Block: return "Block";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::AsyncFunctionDef: return "AsyncFunctionDef";
    case NodeKind::ClassDef: return "ClassDef";
    case NodeKind::Decorator: return "Decorator";
    case NodeKind::Assign: return "Assign";
    case NodeKind::AugAssign: return "AugAssign";
    case NodeKind::AnnAssign: return "AnnAssign";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::Return: return "Return";
    case NodeKind::Delete: return "Delete";
    case NodeKind::Pass: return "Pass";
    case NodeKind::Break: return "Break";
    case NodeKind::Continue: return "Continue";
    case NodeKind::Raise: return "Raise";
    case NodeKind::Global: return "Global";
    case NodeKind::Nonlocal: return "Nonlocal";
    case NodeKind::Assert: return "Assert";
    case NodeKind::Import: return "Import";
    case NodeKind::ImportFrom: return "ImportFrom";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::For: return "For";
    case NodeKind::Try: return "Try";
    case NodeKind::With: return "With";
    case NodeKind::Match: return "Match";
    case NodeKind::Parameters: return "Parameters";
    case NodeKind::Param: return "Param";
    case NodeKind::Alias: return "Alias";
    case NodeKind::ExceptHandler: return "ExceptHandler";
    case NodeKind::WithItem: return "WithItem";
    case NodeKind::MatchCase: return "MatchCase";
    case NodeKind::Pattern: return "Pattern";
    case NodeKind::Name: return "Name";
    case NodeKind::Attribute: return "Attribute";
    case NodeKind::Call: return "Call";
    case NodeKind::Keyword: return "Keyword";
    case NodeKind::Starred: return "Starred";
    case NodeKind::DoubleStarred: return "DoubleStarred";
    case NodeKind::Subscript: return "Subscript";
    case NodeKind::Slice: return "Slice";
    case NodeKind::Number: return "Number";
    case NodeKind::String: return "String";
    case NodeKind::FormattedValue: return "FormattedValue";
    case NodeKind::Constant: return "Constant";
    case NodeKind::Tuple: return "Tuple";
    case NodeKind::List: return "List";
    case NodeKind::Set: return "Set";
    case NodeKind::Dict: return "Dict";
    case NodeKind::DictItem: return "DictItem";
    case NodeKind::ListComp: return "ListComp";
    case NodeKind::SetComp: return "SetComp";
    case NodeKind::DictComp: return "DictComp";
    case NodeKind::GeneratorExp: return "GeneratorExp";
    case NodeKind::Comprehension: return "Comprehension";
    case NodeKind::Lambda: return "Lambda";
    case NodeKind::IfExp: return "IfExp";
    case NodeKind::BoolOp: return "BoolOp";
    case NodeKind::BinOp: return "BinOp";
    case NodeKind::UnaryOp: return "UnaryOp";
    case NodeKind::Compare: return "Compare";
    case NodeKind::Await: return "Await";
    case NodeKind::Yield: return "Yield";
    case NodeKind::YieldFrom: return "YieldFrom";
    case NodeKind::NamedExpr: return "NamedExpr";
    case NodeKind::Empty: return "Empty";
  }
  return "?";
}

bool is_statement(NodeKind kind) {
  return kind >= NodeKind::FunctionDef && kind <= NodeKind::Match && kind != NodeKind::Decorator;
}

bool is_function_def(NodeKind kind) {
  return kind == NodeKind::FunctionDef || kind == NodeKind::AsyncFunctionDef;
}

Position SourceTree::position(std::uint32_t offset) const {
  const auto& starts = data_->line_starts;
  auto it = std::upper_bound(starts.begin(), starts.end(), offset);
  auto line = static_cast<int>(it - starts.begin());
  return {line, static_cast<int>(offset - starts[line - 1])};
}

std::uint32_t SourceTree::line_start(std::uint32_t offset) const {
  const auto& starts = data_->line_starts;
  auto it = std::upper_bound(starts.begin(), starts.end(), offset);
  return *(it - 1);
}

std::string_view SourceTree::slice(std::uint32_t begin, std::uint32_t end) const {
  return std::string_view(data_->text).substr(begin, end - begin);
}

std::string_view SourceTree::source_of(NodeId id) const {
  const Node& n = node(id);
  return slice(n.outer_begin, n.outer_end);
}

std::string_view SourceTree::indentation_at(std::uint32_t offset) const {
  std::uint32_t b = line_start(offset);
  std::uint32_t e = b;
  const auto& text = data_->text;
  while (e < text.size() && (text[e] == ' ' || text[e] == '\t' || text[e] == '\f')) ++e;
  return slice(b, e);
}

std::span<const NodeId> SourceTree::statements(NodeId block) const {
  return node(block).children;
}

NodeId SourceTree::body_of(NodeId stmt) const {
  const Node& n = node(stmt);
  switch (n.kind) {
    case NodeKind::Module:
    case NodeKind::Block:
      return stmt;
    case NodeKind::If:
    case NodeKind::While:
      return n.children[1];
    case NodeKind::For:
      return n.children[2];
    case NodeKind::Try:
      return n.children[0];
    case NodeKind::FunctionDef:
    case NodeKind::AsyncFunctionDef:
    case NodeKind::ClassDef:
    case NodeKind::With:
    case NodeKind::ExceptHandler:
    case NodeKind::MatchCase:
      return n.children.back();
    default:
      return kNoNode;
  }
}

std::vector<NodeId> SourceTree::decorators_of(NodeId def) const {
  std::vector<NodeId> out;
  for (NodeId c : node(def).children) {
    if (node(c).kind == NodeKind::Decorator) out.push_back(c);
  }
  return out;
}

bool SourceTree::line_starts_inside_string(std::uint32_t line_begin) const {
  const auto& spans = data_->multiline_strings;
  auto it = std::upper_bound(spans.begin(), spans.end(), line_begin,
                             [](std::uint32_t v, const auto& s) { return v < s.first; });
  if (it == spans.begin()) return false;
  --it;
  return it->first < line_begin && line_begin < it->second;
}

namespace {

void dump_into(const SourceTree& tree, NodeId id, std::string& out) {
  const Node& n = tree.node(id);
  out += '(';
  out += to_string(n.kind);
  if (!n.text.empty()) {
    out += " '";
    out += n.text;
    out += '\'';
  }
  switch (n.ctx) {
    case ExprContext::Store: out += " store"; break;
    case ExprContext::Del: out += " del"; break;
    case ExprContext::Decl: out += " decl"; break;
    case ExprContext::Load: break;
  }
  if (n.has(node_flags::kAsync)) out += " async";
  if (n.has(node_flags::kFString)) out += " f";
  if (n.has(node_flags::kBytes)) out += " b";
  if (n.has(node_flags::kSelfDoc)) out += " selfdoc";
  if (n.kind == NodeKind::Param && n.param_kind != ParamKind::Normal) {
    out += " kind" + std::to_string(static_cast<int>(n.param_kind));
  }
  for (NodeId c : n.children) {
    out += ' ';
    dump_into(tree, c, out);
  }
  out += ')';
}

}  // namespace

std::string dump(const SourceTree& tree, NodeId from) {
  std::string out;
  dump_into(tree, from, out);
  return out;
}

void Rewriter::replace(std::uint32_t begin, std::uint32_t end, std::string text) {
  edits_.push_back({begin, end, std::move(text), edits_.size()});
}

std::string Rewriter::apply() const {
  std::vector<const Edit*> sorted;
  sorted.reserve(edits_.size());
  for (const auto& e : edits_) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const Edit* a, const Edit* b) {
    if (a->begin != b->begin) return a->begin < b->begin;
    if (a->end != b->end) return a->end < b->end;
    return a->order < b->order;
  });
  const std::string& src = tree_->text();
  std::string out;
  out.reserve(src.size());
  std::uint32_t cursor = 0;
  for (const Edit* e : sorted) {
    if (e->begin < cursor || e->end > src.size() || e->begin > e->end) {
      throw RenderError("overlapping or out-of-range edit at offset " + std::to_string(e->begin));
    }
    out.append(src, cursor, e->begin - cursor);
    out += e->text;
    cursor = e->end;
  }
  out.append(src, cursor, std::string::npos);
  return out;
}

SourceTree render_and_reparse(const Rewriter& rewriter) {
  std::string text = rewriter.apply();
  try {
    return SourceTree::parse(text);
  } catch (const SyntaxError& err) {
    throw RenderError(std::string("rewritten source does not parse: ") + err.what());
  }
}

}  // namespace restyle
