#include "restyle/scope.hpp"

#include <algorithm>
#include <cctype>

namespace restyle {

namespace {

constexpr std::string_view kDynamicNames[] = {"eval", "exec", "locals", "globals", "vars", "dir"};

struct PendingOccurrence {
  NodeId node;
  ScopeId scope;
  std::uint32_t begin;
  std::uint32_t end;
  std::string name;
  bool binds;
  bool observed;
  BindingKind kind;
};

}  // namespace

std::string_view to_string(BindingKind kind) {
  switch (kind) {
    case BindingKind::Parameter: return "parameter";
    case BindingKind::AssignmentTarget: return "assignment-target";
    case BindingKind::FunctionName: return "function-name";
    case BindingKind::ClassName: return "class-name";
    case BindingKind::Import: return "import";
    case BindingKind::ComprehensionVariable: return "comprehension-variable";
    case BindingKind::LoopVariable: return "loop-variable";
    case BindingKind::Other: return "other";
  }
  return "?";
}

std::string_view to_string(RenameDecision d) {
  switch (d) {
    case RenameDecision::Safe: return "safe";
    case RenameDecision::ConflictExistingName: return "conflict-existing-name";
    case RenameDecision::ReservedKeyword: return "reserved-keyword";
    case RenameDecision::AliasesFunctionOrClass: return "aliases-function-or-class";
    case RenameDecision::NotAssignmentBound: return "not-assignment-bound";
    case RenameDecision::InvalidIdentifier: return "invalid-identifier";
    case RenameDecision::NameObserved: return "name-observed";
  }
  return "?";
}

std::vector<BindingKind> Binding::kind_list() const {
  std::vector<BindingKind> out;
  for (int k = 0; k <= static_cast<int>(BindingKind::Other); ++k) {
    if ((kinds >> k) & 1u) out.push_back(static_cast<BindingKind>(k));
  }
  return out;
}

std::uint32_t Binding::first_offset(const ScopeTable& table) const {
  return occurrences.empty() ? 0 : table.occurrences()[occurrences.front()].begin;
}

class ScopeBuilder {
 public:
  ScopeBuilder(const SourceTree& tree, ScopeTable& table) : tree_(tree), t_(table) {}

  void run() {
    t_.tree_ = &tree_;
    new_scope(ScopeKind::Module, 0, tree_.root());
    for (NodeId s : tree_.node(tree_.root()).children) visit(s, 0);
    create_bindings();
    resolve_all();
    finish();
  }

 private:
  ScopeId new_scope(ScopeKind kind, ScopeId parent, NodeId node) {
    t_.scopes_.push_back(Scope{kind, parent, node, {}, {}, {}});
    auto id = static_cast<ScopeId>(t_.scopes_.size() - 1);
    t_.scope_by_node_[node] = id;
    return id;
  }

  void record(NodeId node, ScopeId scope, std::uint32_t begin, std::uint32_t end, bool binds,
              BindingKind kind) {
    pending_.push_back({node, scope, begin, end, std::string(tree_.slice(begin, end)), binds,
                        observed_depth_ > 0, kind});
  }

  void record_name(NodeId id, ScopeId scope, bool binds, BindingKind kind) {
    const Node& n = tree_.node(id);
    record(id, scope, n.begin, n.end, binds, kind);
  }

  void visit_children(NodeId id, ScopeId scope) {
    for (NodeId c : tree_.node(id).children) visit(c, scope);
  }

  void visit_target(NodeId id, ScopeId scope, BindingKind kind) {
    const Node& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::Name:
        record_name(id, scope, true, kind);
        return;
      case NodeKind::Tuple:
      case NodeKind::List:
      case NodeKind::Starred:
        for (NodeId c : n.children) visit_target(c, scope, kind);
        return;
      default:
        visit(id, scope);
    }
  }

  ScopeId nearest_non_comprehension(ScopeId s) const {
    while (t_.scopes_[s].kind == ScopeKind::Comprehension) s = t_.scopes_[s].parent;
    return s;
  }

  void visit_function(NodeId id, ScopeId scope) {
    const Node& n = tree_.node(id);
    NodeId params = kNoNode;
    for (NodeId c : n.children) {
      const Node& cn = tree_.node(c);
      if (cn.kind == NodeKind::Parameters) {
        params = c;
        for (NodeId p : cn.children) visit_children(p, scope);  // annotations, defaults
      } else if (cn.kind != NodeKind::Block) {
        visit(c, scope);  // decorators, return annotation
      }
    }
    record(id, scope, n.name_begin, n.name_end, true, BindingKind::FunctionName);
    ScopeId inner = new_scope(ScopeKind::Function, scope, id);
    bind_parameters(params, inner);
    visit(n.children.back(), inner);
  }

  void bind_parameters(NodeId params, ScopeId inner) {
    for (NodeId p : tree_.node(params).children) {
      const Node& pn = tree_.node(p);
      if (pn.param_kind == ParamKind::PosOnlyMarker || pn.param_kind == ParamKind::KwOnlyMarker) {
        continue;
      }
      record(p, inner, pn.name_begin, pn.name_end, true, BindingKind::Parameter);
    }
  }

  void visit_comprehension(NodeId id, ScopeId scope) {
    const Node& n = tree_.node(id);
    std::vector<NodeId> heads;
    std::vector<NodeId> clauses;
    for (NodeId c : n.children) {
      (tree_.node(c).kind == NodeKind::Comprehension ? clauses : heads).push_back(c);
    }
    visit(tree_.node(clauses.front()).children[1], scope);
    ScopeId inner = new_scope(ScopeKind::Comprehension, scope, id);
    for (std::size_t i = 0; i < clauses.size(); ++i) {
      const auto& kids = tree_.node(clauses[i]).children;
      visit_target(kids[0], inner, BindingKind::ComprehensionVariable);
      if (i > 0) visit(kids[1], inner);
      for (std::size_t k = 2; k < kids.size(); ++k) visit(kids[k], inner);
    }
    for (NodeId h : heads) visit(h, inner);
  }

  void visit(NodeId id, ScopeId scope) {
    const Node& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::FunctionDef:
      case NodeKind::AsyncFunctionDef:
        visit_function(id, scope);
        return;
      case NodeKind::Lambda: {
        NodeId params = n.children[0];
        for (NodeId p : tree_.node(params).children) visit_children(p, scope);
        ScopeId inner = new_scope(ScopeKind::Function, scope, id);
        bind_parameters(params, inner);
        visit(n.children[1], inner);
        return;
      }
      case NodeKind::ClassDef: {
        for (NodeId c : n.children) {
          if (tree_.node(c).kind != NodeKind::Block) visit(c, scope);
        }
        record(id, scope, n.name_begin, n.name_end, true, BindingKind::ClassName);
        ScopeId inner = new_scope(ScopeKind::Class, scope, id);
        visit(n.children.back(), inner);
        return;
      }
      case NodeKind::ListComp:
      case NodeKind::SetComp:
      case NodeKind::DictComp:
      case NodeKind::GeneratorExp:
        visit_comprehension(id, scope);
        return;
      case NodeKind::NamedExpr:
        visit(n.children[1], scope);
        record_name(n.children[0], nearest_non_comprehension(scope), true,
                    BindingKind::AssignmentTarget);
        return;
      case NodeKind::Assign:
        visit(n.children.back(), scope);
        for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
          visit_target(n.children[i], scope, BindingKind::AssignmentTarget);
        }
        return;
      case NodeKind::AugAssign:
        visit(n.children[1], scope);
        visit_target(n.children[0], scope, BindingKind::AssignmentTarget);
        return;
      case NodeKind::AnnAssign:
        visit(n.children[1], scope);
        visit(n.children[2], scope);
        visit_target(n.children[0], scope, BindingKind::AssignmentTarget);
        return;
      case NodeKind::For:
        visit(n.children[1], scope);
        visit_target(n.children[0], scope, BindingKind::LoopVariable);
        visit(n.children[2], scope);
        visit(n.children[3], scope);
        return;
      case NodeKind::Alias:
        if (n.text == "*") {
          star_import_ = true;
        } else {
          record_name(n.children[0], scope, true, BindingKind::Import);
        }
        return;
      case NodeKind::Global:
      case NodeKind::Nonlocal:
        for (NodeId c : n.children) {
          const std::string& name = tree_.node(c).text;
          auto& sc = t_.scopes_[scope];
          (n.kind == NodeKind::Global ? sc.globals : sc.nonlocals).insert(name);
          record_name(c, scope, false, BindingKind::Other);
        }
        return;
      case NodeKind::FormattedValue:
        if (n.has(node_flags::kSelfDoc)) {
          ++observed_depth_;
          visit(n.children[0], scope);
          --observed_depth_;
          for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i], scope);
          return;
        }
        break;
      case NodeKind::Name:
        if (n.ctx == ExprContext::Load) {
          record_name(id, scope, false, BindingKind::Other);
        } else {
          record_name(id, scope, true, BindingKind::Other);
        }
        return;
      default:
        break;
    }
    visit_children(id, scope);
  }

  // Scope that a binding operation on `name` in `s` writes to.
  ScopeId target_scope(ScopeId s, const std::string& name) const {
    const Scope& sc = t_.scopes_[s];
    if (sc.kind != ScopeKind::Module && sc.globals.contains(name)) return 0;
    if (sc.nonlocals.contains(name)) {
      ScopeId p = sc.parent;
      ScopeId fallback = kNoScope;
      while (p != 0) {
        const Scope& ps = t_.scopes_[p];
        if (ps.kind == ScopeKind::Function) {
          if (fallback == kNoScope) fallback = p;
          if (local_names_[p].contains(name)) return target_scope(p, name);
        }
        p = ps.parent;
      }
      return fallback == kNoScope ? s : fallback;
    }
    return s;
  }

  BindingId ensure_binding(ScopeId s, const std::string& name) {
    auto& map = t_.scopes_[s].bindings;
    auto it = map.find(name);
    if (it != map.end()) return it->second;
    Binding b;
    b.name = name;
    b.scope = s;
    t_.bindings_.push_back(std::move(b));
    auto id = static_cast<BindingId>(t_.bindings_.size() - 1);
    map.emplace(name, id);
    return id;
  }

  void create_bindings() {
    local_names_.assign(t_.scopes_.size(), {});
    for (const auto& p : pending_) {
      if (!p.binds) continue;
      const Scope& sc = t_.scopes_[p.scope];
      if (sc.globals.contains(p.name) || sc.nonlocals.contains(p.name)) continue;
      local_names_[p.scope].insert(p.name);
    }
    for (const auto& p : pending_) {
      if (!p.binds) continue;
      BindingId b = ensure_binding(target_scope(p.scope, p.name), p.name);
      t_.bindings_[b].kinds |= static_cast<std::uint8_t>(1u << static_cast<int>(p.kind));
    }
  }

  BindingId resolve(ScopeId s, const std::string& name) const {
    bool first = true;
    while (true) {
      const Scope& sc = t_.scopes_[s];
      if (first || sc.kind != ScopeKind::Class) {
        if (sc.kind != ScopeKind::Module && sc.globals.contains(name)) {
          return t_.find(0, name);
        }
        if (sc.nonlocals.contains(name)) return t_.find(target_scope(s, name), name);
        BindingId b = t_.find(s, name);
        if (b != kNoBinding) return b;
      }
      if (sc.kind == ScopeKind::Module) return kNoBinding;
      s = sc.parent;
      first = false;
    }
  }

  void resolve_all() {
    std::vector<std::size_t> order(pending_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pending_[a].begin < pending_[b].begin;
    });
    for (std::size_t idx : order) {
      const auto& p = pending_[idx];
      BindingId b = resolve(p.scope, p.name);
      std::size_t occ = t_.occurrences_.size();
      t_.occurrences_.push_back({p.node, p.scope, p.begin, p.end, p.binds, b});
      t_.occurrence_by_node_[p.node] = occ;
      if (b != kNoBinding) {
        t_.bindings_[b].occurrences.push_back(occ);
        if (p.observed) t_.bindings_[b].name_observed = true;
      } else if (!p.binds) {
        for (auto dyn : kDynamicNames) {
          if (p.name == dyn && t_.unsafe_reason_.empty()) t_.unsafe_reason_ = "dynamic-code";
        }
      }
      t_.names_in_use_.insert(p.name);
      if (p.binds && p.kind == BindingKind::Parameter) t_.parameter_names_.insert(p.name);
      if (p.binds && (p.kind == BindingKind::FunctionName || p.kind == BindingKind::ClassName)) {
        t_.def_names_.insert(p.name);
      }
    }
  }

  void finish() {
    if (t_.unsafe_reason_.empty() && star_import_) t_.unsafe_reason_ = "star-import";
    for (const auto& b : builtin_names()) t_.names_in_use_.insert(b);
  }

  static constexpr ScopeId kNoScope = 0xffffffffu;

  const SourceTree& tree_;
  ScopeTable& t_;
  std::vector<PendingOccurrence> pending_;
  std::vector<std::unordered_set<std::string>> local_names_;
  int observed_depth_ = 0;
  bool star_import_ = false;
};

ScopeTable ScopeTable::build(const SourceTree& tree) {
  ScopeTable table;
  ScopeBuilder(tree, table).run();
  return table;
}

BindingId ScopeTable::find(ScopeId scope, std::string_view name) const {
  const auto& map = scopes_[scope].bindings;
  auto it = map.find(name);
  return it == map.end() ? kNoBinding : it->second;
}

const Occurrence* ScopeTable::occurrence_at(NodeId node) const {
  auto it = occurrence_by_node_.find(node);
  return it == occurrence_by_node_.end() ? nullptr : &occurrences_[it->second];
}

std::optional<ScopeId> ScopeTable::scope_of_node(NodeId node) const {
  auto it = scope_by_node_.find(node);
  if (it == scope_by_node_.end()) return std::nullopt;
  return it->second;
}

bool ScopeTable::is_within(ScopeId inner, ScopeId outer) const {
  while (true) {
    if (inner == outer) return true;
    if (inner == 0) return false;
    inner = scopes_[inner].parent;
  }
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto c0 = static_cast<unsigned char>(s[0]);
  if (!(std::isalpha(c0) || c0 == '_' || c0 >= 0x80)) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c >= 0x80;
  });
}

RenameDecision rename_is_safe(const ScopeTable& table, BindingId id, std::string_view candidate,
                              const std::unordered_set<std::string>& in_use) {
  if (is_reserved_keyword(candidate)) return RenameDecision::ReservedKeyword;
  if (!is_identifier(candidate)) return RenameDecision::InvalidIdentifier;
  const Binding& b = table.binding(id);
  if (!b.has(BindingKind::AssignmentTarget) || b.has(BindingKind::Parameter) ||
      b.has(BindingKind::FunctionName) || b.has(BindingKind::ClassName) ||
      b.has(BindingKind::Import) || table.scope(b.scope).kind == ScopeKind::Class ||
      table.parameter_names().contains(b.name)) {
    return RenameDecision::NotAssignmentBound;
  }
  if (b.name_observed) return RenameDecision::NameObserved;
  // `__x` inside a class body is mangled per class; our resolution does not model that.
  if (b.name.starts_with("__") && !b.name.ends_with("__")) {
    for (std::size_t occ : b.occurrences) {
      for (ScopeId s = table.occurrences()[occ].scope; s != 0; s = table.scope(s).parent) {
        if (table.scope(s).kind == ScopeKind::Class) return RenameDecision::NotAssignmentBound;
      }
    }
  }
  std::string cand(candidate);
  if (table.function_and_class_names().contains(cand)) {
    return RenameDecision::AliasesFunctionOrClass;
  }
  if (in_use.contains(cand)) return RenameDecision::ConflictExistingName;
  return RenameDecision::Safe;
}

const std::unordered_set<std::string>& builtin_names() {
  static const std::unordered_set<std::string> names = {
      "ArithmeticError", "AssertionError", "AttributeError", "BaseException",
      "BlockingIOError", "BrokenPipeError", "BufferError", "BytesWarning",
      "ChildProcessError", "ConnectionAbortedError", "ConnectionError",
      "ConnectionRefusedError", "ConnectionResetError", "DeprecationWarning", "EOFError",
      "Ellipsis", "EncodingWarning", "EnvironmentError", "Exception", "False",
      "FileExistsError", "FileNotFoundError", "FloatingPointError", "FutureWarning",
      "GeneratorExit", "IOError", "ImportError", "ImportWarning", "IndentationError",
      "IndexError", "InterruptedError", "IsADirectoryError", "KeyError", "KeyboardInterrupt",
      "LookupError", "MemoryError", "ModuleNotFoundError", "NameError", "None",
      "NotADirectoryError", "NotImplemented", "NotImplementedError", "OSError",
      "OverflowError", "PendingDeprecationWarning", "PermissionError", "ProcessLookupError",
      "RecursionError", "ReferenceError", "ResourceWarning", "RuntimeError", "RuntimeWarning",
      "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning", "SystemError",
      "SystemExit", "TabError", "TimeoutError", "True", "TypeError", "UnboundLocalError",
      "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError",
      "UnicodeWarning", "UserWarning", "ValueError", "Warning", "ZeroDivisionError",
      "__build_class__", "__debug__", "__doc__", "__import__", "__loader__", "__name__",
      "__package__", "__spec__", "__file__", "__builtins__", "abs", "aiter", "all", "anext",
      "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes", "callable", "chr",
      "classmethod", "compile", "complex", "copyright", "credits", "delattr", "dict", "dir",
      "divmod", "enumerate", "eval", "exec", "exit", "filter", "float", "format", "frozenset",
      "getattr", "globals", "hasattr", "hash", "help", "hex", "id", "input", "int",
      "isinstance", "issubclass", "iter", "len", "license", "list", "locals", "map", "max",
      "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print", "property",
      "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice", "sorted",
      "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip"};
  return names;
}

}  // namespace restyle
