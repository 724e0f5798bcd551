#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "lexer.hpp"
#include "restyle/syntax.hpp"

namespace restyle {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

constexpr std::array<std::string_view, 13> kAugOps = {"+=", "-=", "*=", "/=",  "//=", "%=", "@=",
                                                      "&=", "|=", "^=", ">>=", "<<=", "**="};

struct Arena {
  std::string_view text;
  const detail::LineTable& lines;
  std::vector<Node> nodes;

  NodeId make(NodeKind kind, std::uint32_t begin, std::uint32_t end) {
    Node n;
    n.kind = kind;
    n.begin = n.outer_begin = begin;
    n.end = n.outer_end = end;
    nodes.push_back(std::move(n));
    return static_cast<NodeId>(nodes.size() - 1);
  }
  void add(NodeId parent, NodeId child) {
    nodes[parent].children.push_back(child);
    nodes[child].parent = parent;
  }
  Node& operator[](NodeId id) { return nodes[id]; }
};

class Parser {
 public:
  Parser(Arena& arena, std::vector<Token> tokens) : a_(arena), t_(std::move(tokens)) {}

  NodeId parse_module() {
    NodeId mod = a_.make(NodeKind::Module, 0, static_cast<std::uint32_t>(a_.text.size()));
    std::vector<NodeId> stmts;
    while (cur().kind != TokenKind::EndMarker) {
      if (cur().kind == TokenKind::Newline) {
        advance();
        continue;
      }
      if (cur().kind == TokenKind::Indent) error(cur(), "unexpected indent");
      parse_statement(stmts);
    }
    for (NodeId s : stmts) a_.add(mod, s);
    return mod;
  }

  // Body of an f-string replacement field.
  NodeId parse_field_expression() {
    NodeId e = is_kw("yield") ? parse_yield() : parse_star_expressions(true);
    if (cur().kind != TokenKind::EndMarker) error(cur(), "f-string: invalid syntax");
    return e;
  }

 private:
  // ---- token helpers ----
  const Token& cur() const { return t_[p_]; }
  const Token& ahead(std::size_t k) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  std::string_view tx(const Token& t) const { return a_.text.substr(t.begin, t.end - t.begin); }

  bool is_op(std::string_view s, std::size_t k = 0) const {
    const Token& t = ahead(k);
    return t.kind == TokenKind::Op && tx(t) == s;
  }
  bool is_kw(std::string_view s, std::size_t k = 0) const {
    const Token& t = ahead(k);
    return t.kind == TokenKind::Name && tx(t) == s;
  }
  bool is_ident(std::size_t k = 0) const {
    const Token& t = ahead(k);
    return t.kind == TokenKind::Name && !is_reserved_keyword(tx(t));
  }

  Token advance() {
    Token t = t_[p_];
    if (t.kind != TokenKind::Newline && t.kind != TokenKind::Indent &&
        t.kind != TokenKind::Dedent && t.kind != TokenKind::EndMarker) {
      last_end_ = t.end;
    }
    if (p_ + 1 < t_.size()) ++p_;
    return t;
  }

  [[noreturn]] void error(const Token& t, const std::string& message) const {
    throw SyntaxError(t.line, t.column, message);
  }

  Token expect_op(std::string_view s) {
    if (!is_op(s)) error(cur(), "expected '" + std::string(s) + "'");
    return advance();
  }
  Token expect_kw(std::string_view s) {
    if (!is_kw(s)) error(cur(), "expected '" + std::string(s) + "'");
    return advance();
  }
  Token expect_ident() {
    if (!is_ident()) error(cur(), "invalid syntax");
    return advance();
  }
  void expect_newline() {
    if (cur().kind != TokenKind::Newline) error(cur(), "invalid syntax");
    advance();
  }

  NodeId empty_here() { return a_.make(NodeKind::Empty, last_end_, last_end_); }

  NodeId name_node(const Token& t, ExprContext ctx) {
    NodeId n = a_.make(NodeKind::Name, t.begin, t.end);
    a_[n].text = std::string(tx(t));
    a_[n].ctx = ctx;
    return n;
  }

  bool first_on_line(std::uint32_t offset) const {
    std::uint32_t ls = a_.lines.line_start(offset);
    for (std::uint32_t i = ls; i < offset; ++i) {
      char c = a_.text[i];
      if (c != ' ' && c != '\t' && c != '\f') return false;
    }
    return true;
  }

  // ---- statements ----
  void parse_statement(std::vector<NodeId>& out) {
    if (is_op("@") || is_kw("def") || is_kw("class") || is_kw("if") || is_kw("while") ||
        is_kw("for") || is_kw("try") || is_kw("with") ||
        (is_kw("async") && (is_kw("def", 1) || is_kw("for", 1) || is_kw("with", 1)))) {
      out.push_back(parse_compound());
      return;
    }
    if (is_kw("match") && maybe_match_statement()) {
      std::size_t save = p_;
      std::uint32_t save_end = last_end_;
      std::size_t save_nodes = a_.nodes.size();
      try {
        out.push_back(parse_match());
        return;
      } catch (const SyntaxError&) {
        p_ = save;
        last_end_ = save_end;
        a_.nodes.resize(save_nodes);
      }
    }
    parse_simple_line(out);
  }

  bool maybe_match_statement() const {
    const Token& n = ahead(1);
    if (n.kind == TokenKind::Newline || n.kind == TokenKind::EndMarker) return false;
    if (n.kind == TokenKind::Op) {
      auto s = tx(n);
      if (s == "=" || s == "." || s == ":" || s == "," || s == ";" || s == ")" || s == "]" ||
          s == "}" || s.ends_with("=")) {
        return false;
      }
    }
    return true;
  }

  void finish_compound(NodeId stmt, NodeId last_block) {
    Node& n = a_[stmt];
    n.end = a_[last_block].end;
    n.outer_begin = a_.lines.line_start(n.begin);
    n.outer_end = a_[last_block].outer_end;
    n.flags |= node_flags::kFirstOnLine | node_flags::kLastOnLine;
  }

  void parse_simple_line(std::vector<NodeId>& out) {
    while (true) {
      NodeId s = parse_small_statement();
      Node& n = a_[s];
      if (first_on_line(n.begin)) {
        n.flags |= node_flags::kFirstOnLine;
        n.outer_begin = a_.lines.line_start(n.begin);
      }
      out.push_back(s);
      bool last = false;
      if (is_op(";")) {
        advance();
        last = cur().kind == TokenKind::Newline;
      } else {
        last = true;
      }
      if (last) {
        if (cur().kind != TokenKind::Newline) error(cur(), "invalid syntax");
        a_[s].flags |= node_flags::kLastOnLine;
        a_[s].outer_end = cur().end;
        advance();
        return;
      }
    }
  }

  NodeId parse_block() {
    expect_op(":");
    NodeId block = a_.make(NodeKind::Block, cur().begin, cur().begin);
    std::vector<NodeId> stmts;
    if (cur().kind == TokenKind::Newline) {
      advance();
      if (cur().kind != TokenKind::Indent) error(cur(), "expected an indented block");
      advance();
      while (cur().kind != TokenKind::Dedent && cur().kind != TokenKind::EndMarker) {
        parse_statement(stmts);
      }
      if (cur().kind == TokenKind::Dedent) advance();
    } else {
      a_[block].flags |= node_flags::kInline;
      parse_simple_line(stmts);
    }
    for (NodeId s : stmts) a_.add(block, s);
    Node& b = a_[block];
    b.begin = a_[stmts.front()].begin;
    b.end = a_[stmts.back()].end;
    b.outer_begin = a_[stmts.front()].outer_begin;
    b.outer_end = a_[stmts.back()].outer_end;
    return block;
  }

  NodeId parse_compound() {
    if (is_op("@")) return parse_decorated();
    if (is_kw("async")) {
      Token async_tok = advance();
      NodeId s = is_kw("def") ? parse_funcdef(async_tok.begin, true)
                 : is_kw("for") ? parse_for(async_tok.begin, true)
                                : parse_with(async_tok.begin, true);
      return s;
    }
    if (is_kw("def")) return parse_funcdef(cur().begin, false);
    if (is_kw("class")) return parse_classdef(cur().begin);
    if (is_kw("if")) return parse_if();
    if (is_kw("while")) return parse_while();
    if (is_kw("for")) return parse_for(cur().begin, false);
    if (is_kw("try")) return parse_try();
    return parse_with(cur().begin, false);
  }

  NodeId parse_decorated() {
    std::vector<NodeId> decorators;
    std::uint32_t begin = cur().begin;
    while (is_op("@")) {
      Token at = advance();
      NodeId expr = parse_named_expression();
      NodeId d = a_.make(NodeKind::Decorator, at.begin, last_end_);
      a_.add(d, expr);
      a_[d].outer_begin = a_.lines.line_start(at.begin);
      if (cur().kind != TokenKind::Newline) error(cur(), "invalid syntax");
      a_[d].outer_end = cur().end;
      advance();
      decorators.push_back(d);
    }
    NodeId def;
    if (is_kw("def")) {
      def = parse_funcdef(begin, false, &decorators);
    } else if (is_kw("async") && is_kw("def", 1)) {
      advance();
      def = parse_funcdef(begin, true, &decorators);
    } else if (is_kw("class")) {
      def = parse_classdef(begin, &decorators);
    } else {
      error(cur(), "invalid syntax");
    }
    return def;
  }

  NodeId parse_funcdef(std::uint32_t begin, bool is_async,
                       const std::vector<NodeId>* decorators = nullptr) {
    expect_kw("def");
    Token name = expect_ident();
    NodeId def = a_.make(is_async ? NodeKind::AsyncFunctionDef : NodeKind::FunctionDef, begin, 0);
    a_[def].text = std::string(tx(name));
    a_[def].name_begin = name.begin;
    a_[def].name_end = name.end;
    if (decorators) {
      for (NodeId d : *decorators) a_.add(def, d);
    }
    expect_op("(");
    NodeId params = parse_parameters(")", true);
    expect_op(")");
    a_.add(def, params);
    if (is_op("->")) {
      advance();
      a_.add(def, parse_test());
    } else {
      a_.add(def, empty_here());
    }
    NodeId body = parse_block();
    a_.add(def, body);
    finish_compound(def, body);
    return def;
  }

  NodeId parse_classdef(std::uint32_t begin, const std::vector<NodeId>* decorators = nullptr) {
    expect_kw("class");
    Token name = expect_ident();
    NodeId cls = a_.make(NodeKind::ClassDef, begin, 0);
    a_[cls].text = std::string(tx(name));
    a_[cls].name_begin = name.begin;
    a_[cls].name_end = name.end;
    if (decorators) {
      for (NodeId d : *decorators) a_.add(cls, d);
    }
    if (is_op("(")) {
      advance();
      for (NodeId arg : parse_call_arguments()) a_.add(cls, arg);
      expect_op(")");
    }
    NodeId body = parse_block();
    a_.add(cls, body);
    finish_compound(cls, body);
    return cls;
  }

  NodeId parse_parameters(std::string_view closer, bool annotations) {
    NodeId params = a_.make(NodeKind::Parameters, cur().begin, cur().begin);
    while (!is_op(closer)) {
      Token start = cur();
      NodeId p = a_.make(NodeKind::Param, start.begin, start.end);
      a_[p].ctx = ExprContext::Store;
      NodeId annotation = kNoNode;
      NodeId def = kNoNode;
      auto parse_name = [&] {
        Token nm = expect_ident();
        a_[p].text = std::string(tx(nm));
        a_[p].name_begin = nm.begin;
        a_[p].name_end = nm.end;
        if (annotations && is_op(":")) {
          advance();
          annotation = parse_test();
        }
      };
      if (is_op("/")) {
        advance();
        a_[p].param_kind = ParamKind::PosOnlyMarker;
      } else if (is_op("**")) {
        advance();
        a_[p].param_kind = ParamKind::KwArgs;
        parse_name();
      } else if (is_op("*")) {
        advance();
        if (is_op(",") || is_op(closer)) {
          a_[p].param_kind = ParamKind::KwOnlyMarker;
        } else {
          a_[p].param_kind = ParamKind::VarArgs;
          parse_name();
        }
      } else {
        parse_name();
        if (is_op("=")) {
          advance();
          def = parse_test();
        }
      }
      a_[p].end = a_[p].outer_end = last_end_;
      a_.add(p, annotation == kNoNode ? empty_here() : annotation);
      a_.add(p, def == kNoNode ? empty_here() : def);
      a_.add(params, p);
      if (!is_op(",")) break;
      advance();
    }
    a_[params].end = a_[params].outer_end = last_end_;
    return params;
  }

  NodeId parse_if() {
    Token kw = advance();  // if / elif
    NodeId node = a_.make(NodeKind::If, kw.begin, 0);
    if (tx(kw) == "elif") a_[node].flags |= node_flags::kElif;
    a_.add(node, parse_named_expression());
    NodeId body = parse_block();
    a_.add(node, body);
    NodeId last = body;
    if (is_kw("elif")) {
      NodeId inner = parse_if();
      NodeId orelse = a_.make(NodeKind::Block, a_[inner].begin, a_[inner].end);
      a_[orelse].outer_begin = a_[inner].outer_begin;
      a_[orelse].outer_end = a_[inner].outer_end;
      a_.add(orelse, inner);
      a_.add(node, orelse);
      last = orelse;
    } else if (is_kw("else")) {
      advance();
      NodeId orelse = parse_block();
      a_.add(node, orelse);
      last = orelse;
    } else {
      a_.add(node, empty_here());
    }
    finish_compound(node, last);
    return node;
  }

  NodeId parse_else_into(NodeId node, NodeId body) {
    if (is_kw("else")) {
      advance();
      NodeId orelse = parse_block();
      a_.add(node, orelse);
      return orelse;
    }
    a_.add(node, empty_here());
    return body;
  }

  NodeId parse_while() {
    Token kw = advance();
    NodeId node = a_.make(NodeKind::While, kw.begin, 0);
    a_.add(node, parse_named_expression());
    NodeId body = parse_block();
    a_.add(node, body);
    NodeId last = parse_else_into(node, body);
    finish_compound(node, last);
    return node;
  }

  NodeId parse_for(std::uint32_t begin, bool is_async) {
    expect_kw("for");
    NodeId node = a_.make(NodeKind::For, begin, 0);
    if (is_async) a_[node].flags |= node_flags::kAsync;
    NodeId target = parse_target_list();
    set_context(target, ExprContext::Store);
    expect_kw("in");
    NodeId iter = parse_star_expressions(false);
    a_.add(node, target);
    a_.add(node, iter);
    NodeId body = parse_block();
    a_.add(node, body);
    NodeId last = parse_else_into(node, body);
    finish_compound(node, last);
    return node;
  }

  NodeId parse_try() {
    Token kw = advance();
    NodeId node = a_.make(NodeKind::Try, kw.begin, 0);
    NodeId body = parse_block();
    a_.add(node, body);
    NodeId last = body;
    bool any_handler = false;
    while (is_kw("except")) {
      Token ex = advance();
      NodeId handler = a_.make(NodeKind::ExceptHandler, ex.begin, 0);
      NodeId type = kNoNode;
      NodeId name = kNoNode;
      if (!is_op(":")) {
        type = parse_test();
        if (is_op(",")) {
          // except A, B: is Python 2 only
          error(cur(), "multiple exception types must be parenthesized");
        }
        if (is_kw("as")) {
          advance();
          name = name_node(expect_ident(), ExprContext::Store);
        }
      }
      a_.add(handler, type == kNoNode ? empty_here() : type);
      a_.add(handler, name == kNoNode ? empty_here() : name);
      NodeId hbody = parse_block();
      a_.add(handler, hbody);
      a_[handler].end = a_[hbody].end;
      a_[handler].outer_begin = a_.lines.line_start(ex.begin);
      a_[handler].outer_end = a_[hbody].outer_end;
      a_.add(node, handler);
      last = hbody;
      any_handler = true;
    }
    if (is_kw("else")) {
      if (!any_handler) error(cur(), "invalid syntax");
      advance();
      last = parse_block();
      a_.add(node, last);
    } else {
      a_.add(node, empty_here());
    }
    if (is_kw("finally")) {
      advance();
      last = parse_block();
      a_.add(node, last);
    } else {
      if (!any_handler) error(cur(), "expected 'except' or 'finally' block");
      a_.add(node, empty_here());
    }
    finish_compound(node, last);
    return node;
  }

  NodeId parse_with_item() {
    NodeId expr = parse_test();
    NodeId item = a_.make(NodeKind::WithItem, a_[expr].outer_begin, 0);
    a_.add(item, expr);
    if (is_kw("as")) {
      advance();
      NodeId target = parse_target();
      set_context(target, ExprContext::Store);
      a_.add(item, target);
    } else {
      a_.add(item, empty_here());
    }
    a_[item].end = a_[item].outer_end = last_end_;
    return item;
  }

  NodeId parse_with(std::uint32_t begin, bool is_async) {
    expect_kw("with");
    NodeId node = a_.make(NodeKind::With, begin, 0);
    if (is_async) a_[node].flags |= node_flags::kAsync;
    std::vector<NodeId> items;
    bool done = false;
    if (is_op("(")) {
      std::size_t save = p_;
      std::uint32_t save_end = last_end_;
      std::size_t save_nodes = a_.nodes.size();
      try {
        advance();
        while (!is_op(")")) {
          items.push_back(parse_with_item());
          if (!is_op(",")) break;
          advance();
        }
        expect_op(")");
        if (!is_op(":")) error(cur(), "invalid syntax");
        done = true;
      } catch (const SyntaxError&) {
        p_ = save;
        last_end_ = save_end;
        a_.nodes.resize(save_nodes);
        items.clear();
      }
    }
    if (!done) {
      while (true) {
        items.push_back(parse_with_item());
        if (!is_op(",")) break;
        advance();
      }
    }
    for (NodeId it : items) a_.add(node, it);
    NodeId body = parse_block();
    a_.add(node, body);
    finish_compound(node, body);
    return node;
  }

  // ---- match statement ----
  NodeId parse_match() {
    Token kw = advance();
    NodeId node = a_.make(NodeKind::Match, kw.begin, 0);
    NodeId subject = parse_star_named_expressions_tuple();
    a_.add(node, subject);
    expect_op(":");
    expect_newline();
    if (cur().kind != TokenKind::Indent) error(cur(), "expected an indented block");
    advance();
    NodeId last = kNoNode;
    while (is_kw("case")) {
      Token ck = advance();
      NodeId mc = a_.make(NodeKind::MatchCase, ck.begin, 0);
      a_.add(mc, parse_patterns());
      if (is_kw("if")) {
        advance();
        a_.add(mc, parse_named_expression());
      } else {
        a_.add(mc, empty_here());
      }
      NodeId body = parse_block();
      a_.add(mc, body);
      a_[mc].end = a_[body].end;
      a_[mc].outer_begin = a_.lines.line_start(ck.begin);
      a_[mc].outer_end = a_[body].outer_end;
      a_.add(node, mc);
      last = body;
    }
    if (last == kNoNode) error(cur(), "expected 'case' block");
    if (cur().kind != TokenKind::Dedent && cur().kind != TokenKind::EndMarker) {
      error(cur(), "invalid syntax");
    }
    if (cur().kind == TokenKind::Dedent) advance();
    finish_compound(node, last);
    return node;
  }

  NodeId pattern_node(std::string_view sub, std::uint32_t begin) {
    NodeId p = a_.make(NodeKind::Pattern, begin, begin);
    a_[p].text = std::string(sub);
    return p;
  }
  void close(NodeId n) { a_[n].end = a_[n].outer_end = last_end_; }

  NodeId parse_patterns() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_pattern(true);
    if (!is_op(",")) return first;
    NodeId seq = pattern_node("sequence", begin);
    a_.add(seq, first);
    while (is_op(",")) {
      advance();
      if (is_op(":") || is_kw("if")) break;
      a_.add(seq, parse_pattern(true));
    }
    close(seq);
    return seq;
  }

  NodeId parse_pattern(bool allow_star) {
    std::uint32_t begin = cur().begin;
    if (allow_star && is_op("*")) {
      advance();
      NodeId star = pattern_node("star", begin);
      Token nm = expect_ident();
      if (tx(nm) != "_") a_.add(star, name_node(nm, ExprContext::Store));
      close(star);
      return star;
    }
    NodeId first = parse_closed_pattern();
    NodeId result = first;
    if (is_op("|")) {
      NodeId alt = pattern_node("or", begin);
      a_.add(alt, first);
      while (is_op("|")) {
        advance();
        a_.add(alt, parse_closed_pattern());
      }
      close(alt);
      result = alt;
    }
    if (is_kw("as")) {
      advance();
      NodeId as = pattern_node("as", begin);
      a_.add(as, result);
      a_.add(as, name_node(expect_ident(), ExprContext::Store));
      close(as);
      result = as;
    }
    return result;
  }

  NodeId parse_dotted_value() {
    NodeId value = name_node(expect_ident(), ExprContext::Load);
    while (is_op(".")) {
      advance();
      Token attr = expect_ident();
      NodeId at = a_.make(NodeKind::Attribute, a_[value].begin, attr.end);
      a_[at].text = std::string(tx(attr));
      a_[at].name_begin = attr.begin;
      a_[at].name_end = attr.end;
      a_.add(at, value);
      value = at;
    }
    return value;
  }

  NodeId parse_closed_pattern() {
    std::uint32_t begin = cur().begin;
    if (is_op("(") || is_op("[")) {
      std::string_view closer = is_op("(") ? ")" : "]";
      bool paren = closer == ")";
      advance();
      NodeId seq = pattern_node(paren ? "group" : "sequence", begin);
      bool comma = false;
      while (!is_op(closer)) {
        a_.add(seq, parse_pattern(true));
        if (!is_op(",")) break;
        comma = true;
        advance();
      }
      expect_op(closer);
      if (paren && (comma || a_[seq].children.empty())) a_[seq].text = "sequence";
      close(seq);
      return seq;
    }
    if (is_op("{")) {
      advance();
      NodeId map = pattern_node("mapping", begin);
      while (!is_op("}")) {
        if (is_op("**")) {
          advance();
          NodeId rest = pattern_node("rest", cur().begin);
          a_.add(rest, name_node(expect_ident(), ExprContext::Store));
          close(rest);
          a_.add(map, rest);
        } else {
          NodeId key = is_ident() ? parse_dotted_value() : parse_literal_pattern_value();
          expect_op(":");
          NodeId item = pattern_node("item", a_[key].begin);
          a_.add(item, key);
          a_.add(item, parse_pattern(false));
          close(item);
          a_.add(map, item);
        }
        if (!is_op(",")) break;
        advance();
      }
      expect_op("}");
      close(map);
      return map;
    }
    if (is_ident()) {
      if (tx(cur()) == "_" && !is_op(".", 1) && !is_op("(", 1)) {
        advance();
        NodeId w = pattern_node("wildcard", begin);
        close(w);
        return w;
      }
      if (!is_op(".", 1) && !is_op("(", 1)) {
        NodeId cap = pattern_node("capture", begin);
        a_.add(cap, name_node(advance(), ExprContext::Store));
        close(cap);
        return cap;
      }
      NodeId value = parse_dotted_value();
      if (is_op("(")) {
        advance();
        NodeId cls = pattern_node("class", begin);
        a_.add(cls, value);
        while (!is_op(")")) {
          if (is_ident() && is_op("=", 1)) {
            Token kw = advance();
            advance();
            NodeId kwp = pattern_node("keyword", kw.begin);
            a_[kwp].name_begin = kw.begin;
            a_[kwp].name_end = kw.end;
            a_[kwp].text = "keyword:" + std::string(tx(kw));
            a_.add(kwp, parse_pattern(false));
            close(kwp);
            a_.add(cls, kwp);
          } else {
            a_.add(cls, parse_pattern(false));
          }
          if (!is_op(",")) break;
          advance();
        }
        expect_op(")");
        close(cls);
        return cls;
      }
      NodeId v = pattern_node("value", begin);
      a_.add(v, value);
      close(v);
      return v;
    }
    NodeId v = pattern_node("value", begin);
    a_.add(v, parse_literal_pattern_value());
    close(v);
    return v;
  }

  NodeId parse_literal_pattern_value() {
    if (cur().kind == TokenKind::String) return parse_strings();
    if (is_kw("None") || is_kw("True") || is_kw("False")) {
      Token t = advance();
      NodeId c = a_.make(NodeKind::Constant, t.begin, t.end);
      a_[c].text = std::string(tx(t));
      return c;
    }
    if (cur().kind == TokenKind::Number || is_op("-")) return parse_arith();
    error(cur(), "invalid pattern");
  }

  // ---- simple statements ----
  NodeId simple(NodeKind kind, const Token& kw) {
    NodeId n = a_.make(kind, kw.begin, kw.end);
    return n;
  }

  NodeId parse_small_statement() {
    const Token start = cur();
    if (is_kw("pass")) return simple(NodeKind::Pass, advance());
    if (is_kw("break")) return simple(NodeKind::Break, advance());
    if (is_kw("continue")) return simple(NodeKind::Continue, advance());
    if (is_kw("return")) {
      advance();
      NodeId n = a_.make(NodeKind::Return, start.begin, 0);
      if (!at_statement_end()) a_.add(n, parse_star_expressions(false));
      close(n);
      return n;
    }
    if (is_kw("raise")) {
      advance();
      NodeId n = a_.make(NodeKind::Raise, start.begin, 0);
      NodeId exc = kNoNode;
      NodeId cause = kNoNode;
      if (!at_statement_end()) {
        exc = parse_test();
        if (is_kw("from")) {
          advance();
          cause = parse_test();
        }
      }
      a_.add(n, exc == kNoNode ? empty_here() : exc);
      a_.add(n, cause == kNoNode ? empty_here() : cause);
      close(n);
      return n;
    }
    if (is_kw("global") || is_kw("nonlocal")) {
      bool global = is_kw("global");
      advance();
      NodeId n = a_.make(global ? NodeKind::Global : NodeKind::Nonlocal, start.begin, 0);
      while (true) {
        a_.add(n, name_node(expect_ident(), ExprContext::Decl));
        if (!is_op(",")) break;
        advance();
      }
      close(n);
      return n;
    }
    if (is_kw("del")) {
      advance();
      NodeId n = a_.make(NodeKind::Delete, start.begin, 0);
      while (true) {
        NodeId target = parse_target();
        set_context(target, ExprContext::Del);
        a_.add(n, target);
        if (!is_op(",")) break;
        advance();
        if (at_statement_end()) break;
      }
      close(n);
      return n;
    }
    if (is_kw("assert")) {
      advance();
      NodeId n = a_.make(NodeKind::Assert, start.begin, 0);
      a_.add(n, parse_test());
      if (is_op(",")) {
        advance();
        a_.add(n, parse_test());
      } else {
        a_.add(n, empty_here());
      }
      close(n);
      return n;
    }
    if (is_kw("import")) return parse_import();
    if (is_kw("from")) return parse_import_from();
    return parse_expression_statement();
  }

  bool at_statement_end() const {
    return cur().kind == TokenKind::Newline || cur().kind == TokenKind::EndMarker || is_op(";");
  }

  NodeId parse_import() {
    Token kw = advance();
    NodeId n = a_.make(NodeKind::Import, kw.begin, 0);
    while (true) {
      Token first = expect_ident();
      NodeId alias = a_.make(NodeKind::Alias, first.begin, first.end);
      std::string dotted(tx(first));
      while (is_op(".")) {
        advance();
        dotted += ".";
        dotted += tx(expect_ident());
      }
      a_[alias].text = dotted;
      if (is_kw("as")) {
        advance();
        a_.add(alias, name_node(expect_ident(), ExprContext::Store));
      } else {
        a_.add(alias, name_node(first, ExprContext::Store));
      }
      close(alias);
      a_.add(n, alias);
      if (!is_op(",")) break;
      advance();
    }
    close(n);
    return n;
  }

  NodeId parse_import_from() {
    Token kw = advance();
    NodeId n = a_.make(NodeKind::ImportFrom, kw.begin, 0);
    std::string module;
    while (is_op(".") || is_op("...")) module += tx(advance());
    if (!is_kw("import")) {
      module += tx(expect_ident());
      while (is_op(".")) {
        advance();
        module += ".";
        module += tx(expect_ident());
      }
    }
    a_[n].text = module;
    expect_kw("import");
    if (is_op("*")) {
      Token star = advance();
      NodeId alias = a_.make(NodeKind::Alias, star.begin, star.end);
      a_[alias].text = "*";
      a_.add(n, alias);
      close(n);
      return n;
    }
    bool paren = false;
    if (is_op("(")) {
      advance();
      paren = true;
    }
    while (true) {
      if (paren && is_op(")")) break;
      Token nm = expect_ident();
      NodeId alias = a_.make(NodeKind::Alias, nm.begin, nm.end);
      a_[alias].text = std::string(tx(nm));
      if (is_kw("as")) {
        advance();
        a_.add(alias, name_node(expect_ident(), ExprContext::Store));
      } else {
        a_.add(alias, name_node(nm, ExprContext::Store));
      }
      close(alias);
      a_.add(n, alias);
      if (!is_op(",")) break;
      advance();
      if (!paren && at_statement_end()) error(cur(), "trailing comma not allowed without parentheses");
    }
    if (paren) expect_op(")");
    close(n);
    return n;
  }

  NodeId parse_expression_statement() {
    std::uint32_t begin = cur().begin;
    NodeId first = is_kw("yield") ? parse_yield() : parse_star_expressions(false);
    if (is_op("=")) {
      std::vector<NodeId> parts{first};
      while (is_op("=")) {
        advance();
        parts.push_back(is_kw("yield") ? parse_yield() : parse_star_expressions(false));
      }
      NodeId n = a_.make(NodeKind::Assign, begin, 0);
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        set_context(parts[i], ExprContext::Store);
        a_.add(n, parts[i]);
      }
      a_.add(n, parts.back());
      close(n);
      return n;
    }
    for (auto op : kAugOps) {
      if (is_op(op)) {
        advance();
        check_aug_target(first);
        set_context(first, ExprContext::Store);
        NodeId value = is_kw("yield") ? parse_yield() : parse_star_expressions(false);
        NodeId n = a_.make(NodeKind::AugAssign, begin, 0);
        a_[n].text = std::string(op);
        a_.add(n, first);
        a_.add(n, value);
        close(n);
        return n;
      }
    }
    if (is_op(":")) {
      advance();
      check_aug_target(first);
      set_context(first, ExprContext::Store);
      NodeId annotation = parse_test();
      NodeId n = a_.make(NodeKind::AnnAssign, begin, 0);
      a_.add(n, first);
      a_.add(n, annotation);
      if (is_op("=")) {
        advance();
        a_.add(n, is_kw("yield") ? parse_yield() : parse_star_expressions(false));
      } else {
        a_.add(n, empty_here());
      }
      close(n);
      return n;
    }
    NodeId n = a_.make(NodeKind::ExprStmt, begin, 0);
    a_.add(n, first);
    close(n);
    return n;
  }

  void check_aug_target(NodeId target) {
    auto k = a_[target].kind;
    if (k != NodeKind::Name && k != NodeKind::Attribute && k != NodeKind::Subscript) {
      throw SyntaxError(a_.lines.position(a_[target].begin).line,
                        a_.lines.position(a_[target].begin).column,
                        "illegal expression for augmented assignment");
    }
  }

  void set_context(NodeId id, ExprContext ctx) {
    Node& n = a_[id];
    switch (n.kind) {
      case NodeKind::Name:
      case NodeKind::Attribute:
      case NodeKind::Subscript:
        n.ctx = ctx;
        return;
      case NodeKind::Starred:
        n.ctx = ctx;
        set_context(n.children[0], ctx);
        return;
      case NodeKind::Tuple:
      case NodeKind::List: {
        n.ctx = ctx;
        auto kids = n.children;
        for (NodeId c : kids) set_context(c, ctx);
        return;
      }
      default: {
        auto p = a_.lines.position(n.begin);
        throw SyntaxError(p.line, p.column,
                          std::string("cannot assign to ") + std::string(to_string(n.kind)));
      }
    }
  }

  // ---- expressions ----
  NodeId make_tuple(std::vector<NodeId> elts, std::uint32_t begin) {
    NodeId t = a_.make(NodeKind::Tuple, begin, last_end_);
    for (NodeId e : elts) a_.add(t, e);
    return t;
  }

  bool at_expression_start() const {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Name: {
        auto s = tx(t);
        if (!is_reserved_keyword(s)) return true;
        return s == "None" || s == "True" || s == "False" || s == "not" || s == "lambda" ||
               s == "await" || s == "yield";
      }
      case TokenKind::Number:
      case TokenKind::String:
        return true;
      case TokenKind::Op: {
        auto s = tx(t);
        return s == "(" || s == "[" || s == "{" || s == "-" || s == "+" || s == "~" ||
               s == "..." || s == "*";
      }
      default:
        return false;
    }
  }

  // star_expressions; named=true also allows walrus at top level.
  NodeId parse_star_expressions(bool named) {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_star_expression(named);
    if (!is_op(",")) return first;
    std::vector<NodeId> elts{first};
    while (is_op(",")) {
      advance();
      if (!at_expression_start()) break;
      elts.push_back(parse_star_expression(named));
    }
    return make_tuple(std::move(elts), begin);
  }

  NodeId parse_star_expression(bool named) {
    if (is_op("*")) {
      Token star = advance();
      NodeId inner = parse_bitwise_or();
      NodeId s = a_.make(NodeKind::Starred, star.begin, last_end_);
      a_.add(s, inner);
      return s;
    }
    return named ? parse_named_expression() : parse_test();
  }

  NodeId parse_star_named_expressions_tuple() { return parse_star_expressions(true); }

  NodeId parse_target_list() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_target();
    if (!is_op(",")) return first;
    std::vector<NodeId> elts{first};
    while (is_op(",")) {
      advance();
      if (is_kw("in") || is_op("=") || is_op(":")) break;
      elts.push_back(parse_target());
    }
    return make_tuple(std::move(elts), begin);
  }

  NodeId parse_target() {
    if (is_op("*")) {
      Token star = advance();
      NodeId inner = parse_bitwise_or();
      NodeId s = a_.make(NodeKind::Starred, star.begin, last_end_);
      a_.add(s, inner);
      return s;
    }
    return parse_bitwise_or();
  }

  NodeId parse_named_expression() {
    if (is_ident() && is_op(":=", 1)) {
      Token nm = advance();
      advance();
      NodeId target = name_node(nm, ExprContext::Store);
      NodeId value = parse_test();
      NodeId n = a_.make(NodeKind::NamedExpr, nm.begin, last_end_);
      a_.add(n, target);
      a_.add(n, value);
      return n;
    }
    return parse_test();
  }

  NodeId parse_test() {
    if (is_kw("lambda")) return parse_lambda();
    std::uint32_t begin = cur().begin;
    NodeId body = parse_or();
    if (is_kw("if")) {
      advance();
      NodeId test = parse_or();
      expect_kw("else");
      NodeId orelse = parse_test();
      NodeId n = a_.make(NodeKind::IfExp, begin, last_end_);
      a_.add(n, body);
      a_.add(n, test);
      a_.add(n, orelse);
      return n;
    }
    return body;
  }

  NodeId parse_lambda() {
    Token kw = advance();
    NodeId n = a_.make(NodeKind::Lambda, kw.begin, 0);
    NodeId params = parse_parameters(":", false);
    expect_op(":");
    NodeId body = parse_test();
    a_.add(n, params);
    a_.add(n, body);
    close(n);
    return n;
  }

  NodeId parse_or() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_and();
    if (!is_kw("or")) return first;
    NodeId n = a_.make(NodeKind::BoolOp, begin, 0);
    a_[n].text = "or";
    a_.add(n, first);
    while (is_kw("or")) {
      advance();
      a_.add(n, parse_and());
    }
    close(n);
    return n;
  }

  NodeId parse_and() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_not();
    if (!is_kw("and")) return first;
    NodeId n = a_.make(NodeKind::BoolOp, begin, 0);
    a_[n].text = "and";
    a_.add(n, first);
    while (is_kw("and")) {
      advance();
      a_.add(n, parse_not());
    }
    close(n);
    return n;
  }

  NodeId parse_not() {
    if (is_kw("not")) {
      Token kw = advance();
      NodeId operand = parse_not();
      NodeId n = a_.make(NodeKind::UnaryOp, kw.begin, last_end_);
      a_[n].text = "not";
      a_.add(n, operand);
      return n;
    }
    return parse_comparison();
  }

  bool comparison_op(std::string& op) {
    static constexpr std::array<std::string_view, 6> ops = {"<", ">", "==", ">=", "<=", "!="};
    for (auto o : ops) {
      if (is_op(o)) {
        advance();
        op = std::string(o);
        return true;
      }
    }
    if (is_kw("in")) {
      advance();
      op = "in";
      return true;
    }
    if (is_kw("not") && is_kw("in", 1)) {
      advance();
      advance();
      op = "not in";
      return true;
    }
    if (is_kw("is")) {
      advance();
      if (is_kw("not")) {
        advance();
        op = "is not";
      } else {
        op = "is";
      }
      return true;
    }
    return false;
  }

  NodeId parse_comparison() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_bitwise_or();
    std::string op;
    if (!comparison_op(op)) return first;
    NodeId n = a_.make(NodeKind::Compare, begin, 0);
    a_.add(n, first);
    std::string ops = op;
    a_.add(n, parse_bitwise_or());
    while (comparison_op(op)) {
      ops += ",";
      ops += op;
      a_.add(n, parse_bitwise_or());
    }
    a_[n].text = ops;
    close(n);
    return n;
  }

  template <typename Next>
  NodeId parse_binary(std::initializer_list<std::string_view> ops, Next next) {
    std::uint32_t begin = cur().begin;
    NodeId left = (this->*next)();
    while (true) {
      std::string_view matched;
      for (auto o : ops) {
        if (is_op(o)) matched = o;
      }
      if (matched.empty()) return left;
      advance();
      NodeId right = (this->*next)();
      NodeId n = a_.make(NodeKind::BinOp, begin, last_end_);
      a_[n].text = std::string(matched);
      a_.add(n, left);
      a_.add(n, right);
      left = n;
    }
  }

  NodeId parse_bitwise_or() { return parse_binary({"|"}, &Parser::parse_xor); }
  NodeId parse_xor() { return parse_binary({"^"}, &Parser::parse_bitand); }
  NodeId parse_bitand() { return parse_binary({"&"}, &Parser::parse_shift); }
  NodeId parse_shift() { return parse_binary({"<<", ">>"}, &Parser::parse_arith); }
  NodeId parse_arith() { return parse_binary({"+", "-"}, &Parser::parse_term); }
  NodeId parse_term() { return parse_binary({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

  NodeId parse_factor() {
    if (is_op("+") || is_op("-") || is_op("~")) {
      Token op = advance();
      NodeId operand = parse_factor();
      NodeId n = a_.make(NodeKind::UnaryOp, op.begin, last_end_);
      a_[n].text = std::string(tx(op));
      a_.add(n, operand);
      return n;
    }
    return parse_power();
  }

  NodeId parse_power() {
    std::uint32_t begin = cur().begin;
    NodeId base = parse_await_primary();
    if (is_op("**")) {
      advance();
      NodeId exp = parse_factor();
      NodeId n = a_.make(NodeKind::BinOp, begin, last_end_);
      a_[n].text = "**";
      a_.add(n, base);
      a_.add(n, exp);
      return n;
    }
    return base;
  }

  NodeId parse_await_primary() {
    if (is_kw("await")) {
      Token kw = advance();
      NodeId inner = parse_primary();
      NodeId n = a_.make(NodeKind::Await, kw.begin, last_end_);
      a_.add(n, inner);
      return n;
    }
    return parse_primary();
  }

  NodeId parse_primary() {
    NodeId node = parse_atom();
    std::uint32_t begin = a_[node].outer_begin;
    while (true) {
      if (is_op(".")) {
        advance();
        Token attr = expect_ident();
        NodeId n = a_.make(NodeKind::Attribute, begin, attr.end);
        a_[n].text = std::string(tx(attr));
        a_[n].name_begin = attr.begin;
        a_[n].name_end = attr.end;
        a_.add(n, node);
        node = n;
      } else if (is_op("(")) {
        advance();
        auto args = parse_call_arguments();
        expect_op(")");
        NodeId n = a_.make(NodeKind::Call, begin, last_end_);
        a_.add(n, node);
        for (NodeId arg : args) a_.add(n, arg);
        node = n;
      } else if (is_op("[")) {
        advance();
        NodeId index = parse_slices();
        expect_op("]");
        NodeId n = a_.make(NodeKind::Subscript, begin, last_end_);
        a_.add(n, node);
        a_.add(n, index);
        node = n;
      } else {
        return node;
      }
    }
  }

  std::vector<NodeId> parse_call_arguments() {
    std::vector<NodeId> args;
    while (!is_op(")")) {
      Token start = cur();
      if (is_op("*")) {
        advance();
        NodeId inner = parse_test();
        NodeId s = a_.make(NodeKind::Starred, start.begin, last_end_);
        a_.add(s, inner);
        args.push_back(s);
      } else if (is_op("**")) {
        advance();
        NodeId inner = parse_test();
        NodeId s = a_.make(NodeKind::DoubleStarred, start.begin, last_end_);
        a_.add(s, inner);
        args.push_back(s);
      } else if (is_ident() && is_op("=", 1)) {
        Token nm = advance();
        advance();
        NodeId value = parse_test();
        NodeId k = a_.make(NodeKind::Keyword, nm.begin, last_end_);
        a_[k].text = std::string(tx(nm));
        a_[k].name_begin = nm.begin;
        a_[k].name_end = nm.end;
        a_.add(k, value);
        args.push_back(k);
      } else {
        NodeId value = parse_named_expression();
        if (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
          NodeId gen = a_.make(NodeKind::GeneratorExp, a_[value].outer_begin, 0);
          a_.add(gen, value);
          parse_comprehension_clauses(gen);
          close(gen);
          value = gen;
        }
        args.push_back(value);
      }
      if (!is_op(",")) break;
      advance();
    }
    return args;
  }

  NodeId parse_slices() {
    std::uint32_t begin = cur().begin;
    NodeId first = parse_slice();
    if (!is_op(",")) return first;
    std::vector<NodeId> elts{first};
    while (is_op(",")) {
      advance();
      if (is_op("]")) break;
      elts.push_back(parse_slice());
    }
    return make_tuple(std::move(elts), begin);
  }

  NodeId parse_slice() {
    std::uint32_t begin = cur().begin;
    NodeId lower = kNoNode;
    if (!is_op(":")) {
      if (is_op("*")) return parse_star_expression(true);
      lower = parse_named_expression();
      if (!is_op(":")) return lower;
    }
    NodeId s = a_.make(NodeKind::Slice, begin, 0);
    a_.add(s, lower == kNoNode ? empty_here() : lower);
    advance();  // ':'
    bool upper_present = !is_op(":") && !is_op("]") && !is_op(",");
    a_.add(s, upper_present ? parse_test() : empty_here());
    if (is_op(":")) {
      advance();
      bool step_present = !is_op("]") && !is_op(",");
      a_.add(s, step_present ? parse_test() : empty_here());
    } else {
      a_.add(s, empty_here());
    }
    close(s);
    return s;
  }

  void parse_comprehension_clauses(NodeId owner) {
    while (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
      Token start = cur();
      bool is_async = is_kw("async");
      if (is_async) advance();
      advance();  // for
      NodeId comp = a_.make(NodeKind::Comprehension, start.begin, 0);
      if (is_async) a_[comp].flags |= node_flags::kAsync;
      NodeId target = parse_target_list();
      set_context(target, ExprContext::Store);
      expect_kw("in");
      NodeId iter = parse_or();
      a_.add(comp, target);
      a_.add(comp, iter);
      while (is_kw("if")) {
        advance();
        a_.add(comp, parse_or_maybe_lambda());
      }
      close(comp);
      a_.add(owner, comp);
    }
  }

  NodeId parse_or_maybe_lambda() {
    if (is_kw("lambda")) return parse_lambda();
    return parse_or();
  }

  NodeId parse_yield() {
    Token kw = advance();
    if (is_kw("from")) {
      advance();
      NodeId value = parse_test();
      NodeId n = a_.make(NodeKind::YieldFrom, kw.begin, last_end_);
      a_.add(n, value);
      return n;
    }
    NodeId n = a_.make(NodeKind::Yield, kw.begin, 0);
    if (at_expression_start()) a_.add(n, parse_star_expressions(false));
    close(n);
    return n;
  }

  void mark_parenthesized(NodeId id, std::uint32_t open, std::uint32_t close_end) {
    a_[id].outer_begin = open;
    a_[id].outer_end = close_end;
  }

  NodeId parse_atom() {
    const Token t = cur();
    switch (t.kind) {
      case TokenKind::Number: {
        advance();
        NodeId n = a_.make(NodeKind::Number, t.begin, t.end);
        a_[n].text = std::string(tx(t));
        return n;
      }
      case TokenKind::String:
        return parse_strings();
      case TokenKind::Name: {
        auto s = tx(t);
        if (s == "None" || s == "True" || s == "False") {
          advance();
          NodeId n = a_.make(NodeKind::Constant, t.begin, t.end);
          a_[n].text = std::string(s);
          return n;
        }
        if (is_reserved_keyword(s)) error(t, "invalid syntax");
        advance();
        return name_node(t, ExprContext::Load);
      }
      case TokenKind::Op:
        break;
      default:
        error(t, "invalid syntax");
    }
    auto s = tx(t);
    if (s == "...") {
      advance();
      NodeId n = a_.make(NodeKind::Constant, t.begin, t.end);
      a_[n].text = "...";
      return n;
    }
    if (s == "(") return parse_paren();
    if (s == "[") return parse_list();
    if (s == "{") return parse_brace();
    error(t, "invalid syntax");
  }

  NodeId parse_paren() {
    Token open = advance();
    if (is_op(")")) {
      Token close_tok = advance();
      return a_.make(NodeKind::Tuple, open.begin, close_tok.end);
    }
    if (is_kw("yield")) {
      NodeId y = parse_yield();
      Token close_tok = expect_op(")");
      mark_parenthesized(y, open.begin, close_tok.end);
      return y;
    }
    NodeId first = parse_star_expression(true);
    if (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
      NodeId gen = a_.make(NodeKind::GeneratorExp, open.begin, 0);
      a_.add(gen, first);
      parse_comprehension_clauses(gen);
      Token close_tok = expect_op(")");
      a_[gen].end = a_[gen].outer_end = close_tok.end;
      return gen;
    }
    if (is_op(",")) {
      std::vector<NodeId> elts{first};
      while (is_op(",")) {
        advance();
        if (is_op(")")) break;
        elts.push_back(parse_star_expression(true));
      }
      Token close_tok = expect_op(")");
      NodeId tup = make_tuple(std::move(elts), open.begin);
      a_[tup].end = a_[tup].outer_end = close_tok.end;
      return tup;
    }
    Token close_tok = expect_op(")");
    mark_parenthesized(first, open.begin, close_tok.end);
    return first;
  }

  NodeId parse_list() {
    Token open = advance();
    if (is_op("]")) {
      Token close_tok = advance();
      return a_.make(NodeKind::List, open.begin, close_tok.end);
    }
    NodeId first = parse_star_expression(true);
    if (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
      NodeId comp = a_.make(NodeKind::ListComp, open.begin, 0);
      a_.add(comp, first);
      parse_comprehension_clauses(comp);
      Token close_tok = expect_op("]");
      a_[comp].end = a_[comp].outer_end = close_tok.end;
      return comp;
    }
    NodeId list = a_.make(NodeKind::List, open.begin, 0);
    a_.add(list, first);
    while (is_op(",")) {
      advance();
      if (is_op("]")) break;
      a_.add(list, parse_star_expression(true));
    }
    Token close_tok = expect_op("]");
    a_[list].end = a_[list].outer_end = close_tok.end;
    return list;
  }

  NodeId parse_dict_entry() {
    if (is_op("**")) {
      Token star = advance();
      NodeId inner = parse_bitwise_or();
      NodeId s = a_.make(NodeKind::DoubleStarred, star.begin, last_end_);
      a_.add(s, inner);
      return s;
    }
    NodeId key = parse_test();
    expect_op(":");
    NodeId value = parse_test();
    NodeId item = a_.make(NodeKind::DictItem, a_[key].outer_begin, last_end_);
    a_.add(item, key);
    a_.add(item, value);
    return item;
  }

  NodeId parse_brace() {
    Token open = advance();
    if (is_op("}")) {
      Token close_tok = advance();
      return a_.make(NodeKind::Dict, open.begin, close_tok.end);
    }
    bool dict = false;
    NodeId first;
    if (is_op("**")) {
      dict = true;
      first = parse_dict_entry();
    } else {
      NodeId head = parse_star_expression(true);
      if (is_op(":")) {
        dict = true;
        advance();
        NodeId value = parse_test();
        if (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
          NodeId comp = a_.make(NodeKind::DictComp, open.begin, 0);
          a_.add(comp, head);
          a_.add(comp, value);
          parse_comprehension_clauses(comp);
          Token close_tok = expect_op("}");
          a_[comp].end = a_[comp].outer_end = close_tok.end;
          return comp;
        }
        first = a_.make(NodeKind::DictItem, a_[head].outer_begin, last_end_);
        a_.add(first, head);
        a_.add(first, value);
      } else {
        first = head;
        if (is_kw("for") || (is_kw("async") && is_kw("for", 1))) {
          NodeId comp = a_.make(NodeKind::SetComp, open.begin, 0);
          a_.add(comp, head);
          parse_comprehension_clauses(comp);
          Token close_tok = expect_op("}");
          a_[comp].end = a_[comp].outer_end = close_tok.end;
          return comp;
        }
      }
    }
    NodeId coll = a_.make(dict ? NodeKind::Dict : NodeKind::Set, open.begin, 0);
    a_.add(coll, first);
    while (is_op(",")) {
      advance();
      if (is_op("}")) break;
      a_.add(coll, dict ? parse_dict_entry() : parse_star_expression(true));
    }
    Token close_tok = expect_op("}");
    a_[coll].end = a_[coll].outer_end = close_tok.end;
    return coll;
  }

  // ---- strings ----
  NodeId parse_strings() {
    Token first = cur();
    NodeId n = a_.make(NodeKind::String, first.begin, first.end);
    std::string joined;
    while (cur().kind == TokenKind::String) {
      Token t = advance();
      if (!joined.empty()) joined += ' ';
      joined += tx(t);
      std::size_t prefix = 0;
      bool is_f = false;
      bool raw = false;
      while (prefix < 2 && t.begin + prefix < t.end && a_.text[t.begin + prefix] != '\'' &&
             a_.text[t.begin + prefix] != '"') {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(a_.text[t.begin + prefix])));
        if (c == 'f') is_f = true;
        if (c == 'r') raw = true;
        if (c == 'b') a_[n].flags |= node_flags::kBytes;
        ++prefix;
      }
      if (is_f) {
        a_[n].flags |= node_flags::kFString;
        std::uint32_t content = t.begin + static_cast<std::uint32_t>(prefix);
        char quote = a_.text[content];
        bool triple = t.end - content >= 6 && a_.text[content + 1] == quote &&
                      a_.text[content + 2] == quote;
        std::uint32_t q = triple ? 3 : 1;
        parse_fstring_fields(n, content + q, t.end - q, raw);
      }
    }
    a_[n].end = a_[n].outer_end = last_end_;
    a_[n].text = std::move(joined);
    return n;
  }

  [[noreturn]] void fail_at(std::uint32_t offset, const std::string& message) const {
    auto p = a_.lines.position(offset);
    throw SyntaxError(p.line, p.column, message);
  }

  // Scans literal text of an f-string (or a format spec) in [b, e) and
  // attaches replacement fields to owner. Returns the offset where scanning
  // stopped (e, or a '}' closing a format spec when in_spec).
  std::uint32_t parse_fstring_fields(NodeId owner, std::uint32_t b, std::uint32_t e, bool raw,
                                     bool in_spec = false) {
    std::string_view text = a_.text;
    std::uint32_t i = b;
    while (i < e) {
      char c = text[i];
      if (c == '\\' && !raw) {
        if (i + 2 < e && text[i + 1] == 'N' && text[i + 2] == '{') {
          while (i < e && text[i] != '}') ++i;
          ++i;
        } else {
          i += 2;
        }
        continue;
      }
      if (c == '{') {
        if (!in_spec && i + 1 < e && text[i + 1] == '{') {
          i += 2;
          continue;
        }
        i = parse_fstring_field(owner, i, e, raw);
        continue;
      }
      if (c == '}') {
        if (in_spec) return i;
        if (i + 1 < e && text[i + 1] == '}') {
          i += 2;
          continue;
        }
        fail_at(i, "f-string: single '}' is not allowed");
      }
      ++i;
    }
    if (in_spec) fail_at(b, "f-string: expecting '}'");
    return i;
  }

  std::uint32_t parse_fstring_field(NodeId owner, std::uint32_t open, std::uint32_t e, bool raw) {
    std::string_view text = a_.text;
    std::uint32_t j = open + 1;
    int depth = 0;
    char in_str = 0;
    bool self_doc = false;
    std::uint32_t expr_end = 0;
    while (true) {
      if (j >= e) fail_at(open, "f-string: expecting '}'");
      char c = text[j];
      if (in_str) {
        if (c == '\\') {
          j += 2;
          continue;
        }
        if (c == in_str) in_str = 0;
        ++j;
        continue;
      }
      if (c == '\'' || c == '"') {
        in_str = c;
        ++j;
        continue;
      }
      if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || (c == '}' && depth > 0)) {
        --depth;
      } else if (depth == 0) {
        if (c == '}' || c == ':') {
          expr_end = j;
          break;
        }
        if (c == '!' && j + 1 < e && text[j + 1] != '=') {
          expr_end = j;
          break;
        }
        if (c == '=' && j + 1 < e && text[j + 1] != '=' && j > open + 1 &&
            std::string_view("=!<>").find(text[j - 1]) == std::string_view::npos) {
          std::uint32_t k = j + 1;
          while (k < e && (text[k] == ' ' || text[k] == '\t')) ++k;
          if (k < e && (text[k] == '}' || text[k] == '!' || text[k] == ':')) {
            self_doc = true;
            expr_end = j;
            j = k;
            break;
          }
        }
      }
      ++j;
    }
    bool blank = true;
    for (std::uint32_t k = open + 1; k < expr_end; ++k) {
      if (!std::isspace(static_cast<unsigned char>(text[k]))) blank = false;
    }
    if (blank) fail_at(open, "f-string: empty expression not allowed");
    NodeId field = a_.make(NodeKind::FormattedValue, open, open);
    if (self_doc) a_[field].flags |= node_flags::kSelfDoc;
    auto tokens = detail::tokenize_expression(text, open + 1, expr_end, a_.lines);
    Parser sub(a_, std::move(tokens));
    NodeId expr = sub.parse_field_expression();
    a_.add(field, expr);
    if (text[j] == '!') {
      j += 2;
    }
    if (j < e && text[j] == ':') {
      j = parse_fstring_fields(field, j + 1, e, raw, true);
    }
    if (j >= e || text[j] != '}') fail_at(open, "f-string: expecting '}'");
    ++j;
    a_[field].end = a_[field].outer_end = j;
    a_.add(owner, field);
    return j;
  }

  Arena& a_;
  std::vector<Token> t_;
  std::size_t p_ = 0;
  std::uint32_t last_end_ = 0;
};

}  // namespace

bool is_reserved_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

SyntaxError::SyntaxError(int line, int column, const std::string& message)
    : std::runtime_error("syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      detail_(message) {}

std::string normalize_newlines(std::string_view source) {
  if (source.starts_with("\xEF\xBB\xBF")) source.remove_prefix(3);
  std::string out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    char c = source[i];
    if (c == '\r') {
      out.push_back('\n');
      if (i + 1 < source.size() && source[i + 1] == '\n') ++i;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

SourceTree SourceTree::parse(std::string_view source) {
  auto data = std::make_shared<Data>();
  data->text = normalize_newlines(source);
  detail::LineTable lines(data->text);
  auto lexed = detail::tokenize_module(data->text, lines);
  Arena arena{data->text, lines, {}};
  Parser parser(arena, lexed.tokens);
  data->root = parser.parse_module();
  data->nodes = std::move(arena.nodes);
  data->tokens = std::move(lexed.tokens);
  data->multiline_strings = std::move(lexed.multiline_strings);
  data->line_starts = lines.starts();
  return SourceTree(std::move(data));
}

}  // namespace restyle
