#include <algorithm>
#include <cctype>

#include "restyle/transforms.hpp"
#include "transform_util.hpp"

namespace restyle {

using detail::finish;
using detail::line_tail;
using detail::make_edit;

std::string_view to_string(TransformId id) {
  switch (id) {
    case TransformId::ListComp: return "listcomp";
    case TransformId::Decorator: return "decorator";
    case TransformId::Casing: return "casing";
    case TransformId::Docstring: return "docstring";
    case TransformId::Reuse: return "reuse";
  }
  return "?";
}

std::optional<TransformId> parse_transform_id(std::string_view name) {
  for (auto id : {TransformId::ListComp, TransformId::Decorator, TransformId::Casing,
                  TransformId::Docstring, TransformId::Reuse}) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

const std::set<std::string>& default_decorator_allowlist() {
  static const std::set<std::string> names = {"lru_cache", "njit"};
  return names;
}

TransformResult apply_transform(TransformId id, const SourceTree& tree,
                                const TransformOptions& options) {
  switch (id) {
    case TransformId::ListComp: return comprehension_to_loop(tree);
    case TransformId::Decorator: return strip_decorators(tree, options.decorator_allowlist);
    case TransformId::Casing: return lowercase_variables(tree);
    case TransformId::Docstring: return strip_docstrings(tree);
    case TransformId::Reuse: return extract_duplicates(tree);
  }
  return {tree, {id, {}, {}, {}}};
}

// ---------------------------------------------------------------------------
// list comprehension -> loop

namespace {

bool inside_inline_block(const SourceTree& tree, NodeId stmt) {
  NodeId parent = tree.node(stmt).parent;
  return parent != kNoNode && tree.node(parent).has(node_flags::kInline);
}

// Expression source, parenthesized when it spans lines so the emitted
// header stays a single logical line.
std::string expr_source(const SourceTree& tree, NodeId id) {
  std::string_view src = tree.source_of(id);
  if (src.find('\n') == std::string_view::npos) return std::string(src);
  return "(" + std::string(src) + ")";
}

std::string check_comprehension(const SourceTree& tree, const ScopeTable& table, NodeId stmt,
                                NodeId comp, const std::string& target) {
  const Occurrence* target_occ = table.occurrence_at(tree.node(stmt).children[0]);
  ScopeId scope = target_occ->scope;
  if (table.scope(scope).kind == ScopeKind::Class) return "class-scope";
  if (!tree.node(stmt).has(node_flags::kFirstOnLine) ||
      !tree.node(stmt).has(node_flags::kLastOnLine) || inside_inline_block(tree, stmt)) {
    return "shares-line";
  }
  bool target_used = false;
  tree.walk(comp, [&](NodeId id) {
    const Node& n = tree.node(id);
    if (n.kind == NodeKind::Name && n.text == target) target_used = true;
    return !target_used;
  });
  if (target_used) return "target-used-in-comprehension";

  ScopeId comp_scope = *table.scope_of_node(comp);
  std::set<std::string> loop_vars;
  for (NodeId c : tree.node(comp).children) {
    if (tree.node(c).kind != NodeKind::Comprehension) continue;
    tree.walk(tree.node(c).children[0], [&](NodeId id) {
      if (tree.node(id).kind == NodeKind::Name) loop_vars.insert(tree.node(id).text);
      return true;
    });
  }
  std::vector<NodeId> loops;
  for (NodeId p = tree.node(stmt).parent; p != kNoNode && p != table.scope(scope).node;
       p = tree.node(p).parent) {
    if (tree.node(p).kind == NodeKind::For || tree.node(p).kind == NodeKind::While) loops.push_back(p);
  }
  for (const auto& occ : table.occurrences()) {
    if (table.is_within(occ.scope, comp_scope) || !table.is_within(occ.scope, scope)) continue;
    std::string_view name = tree.slice(occ.begin, occ.end);
    if (!loop_vars.contains(std::string(name))) continue;
    // The loop variable would now live in `scope`; anything that already
    // sees a same-named variable there or above would be affected.
    if (occ.binding == kNoBinding) return "loop-variable-conflict";
    ScopeId bs = table.binding(occ.binding).scope;
    if (!table.is_within(scope, bs)) continue;
    // A local of this very scope is fine when its every use is over before
    // the loop writes it.
    bool earlier = bs == scope && occ.scope == scope && occ.end <= tree.node(stmt).begin &&
                   std::none_of(loops.begin(), loops.end(), [&](NodeId l) {
                     return occ.begin >= tree.node(l).begin && occ.end <= tree.node(l).end;
                   });
    if (!earlier) return "loop-variable-conflict";
  }
  return {};
}

}  // namespace

TransformResult comprehension_to_loop(const SourceTree& tree) {
  ChangeRecord record{TransformId::ListComp, {}, {}, {}};
  Rewriter rw(tree);
  std::optional<ScopeTable> table;
  tree.walk(tree.root(), [&](NodeId id) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Assign) return true;
    if (n.children.size() != 2) return false;
    NodeId target_id = n.children[0];
    NodeId comp = n.children[1];
    if (tree.node(target_id).kind != NodeKind::Name ||
        tree.node(comp).kind != NodeKind::ListComp) {
      return false;
    }
    if (!table) table = ScopeTable::build(tree);
    const std::string& target = tree.node(target_id).text;
    if (auto reason = check_comprehension(tree, *table, id, comp, target); !reason.empty()) {
      record.skipped.push_back({target + " at line " +
                                    std::to_string(tree.position(n.begin).line),
                                reason});
      return false;
    }

    std::string indent(tree.indentation_at(n.begin));
    std::string out = indent + target + " = []" + std::string(line_tail(tree, id)) + "\n";
    std::string prefix = indent;
    const auto& kids = tree.node(comp).children;
    for (std::size_t i = 1; i < kids.size(); ++i) {
      const Node& clause = tree.node(kids[i]);
      out += prefix + (clause.has(node_flags::kAsync) ? "async for " : "for ") +
             expr_source(tree, clause.children[0]) + " in " +
             expr_source(tree, clause.children[1]) + ":\n";
      prefix += "    ";
      for (std::size_t k = 2; k < clause.children.size(); ++k) {
        out += prefix + "if " + expr_source(tree, clause.children[k]) + ":\n";
        prefix += "    ";
      }
    }
    out += prefix + target + ".append(" + std::string(tree.source_of(kids[0])) + ")\n";
    rw.replace(n.outer_begin, n.outer_end, out);
    record.edits.push_back(make_edit(tree, n.begin, n.end, 2, target));
    return false;
  });
  return finish(tree, rw, std::move(record));
}

// ---------------------------------------------------------------------------
// decorators

namespace {

std::string decorator_base_name(const SourceTree& tree, NodeId decorator) {
  NodeId e = tree.node(decorator).children[0];
  if (tree.node(e).kind == NodeKind::Call) e = tree.node(e).children[0];
  const Node& n = tree.node(e);
  if (n.kind == NodeKind::Name || n.kind == NodeKind::Attribute) return n.text;
  return {};
}

// Names used as the object of an attribute access, `f` in `f.cache_info()`
// or `C.f.cache_clear()`. Stripping a decorator from such a function would
// remove the attributes the wrapper provides.
std::set<std::string> inspected_names(const SourceTree& tree) {
  std::set<std::string> out;
  tree.walk(tree.root(), [&](NodeId id) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Attribute) return true;
    const Node& value = tree.node(n.children[0]);
    if (value.kind == NodeKind::Name || value.kind == NodeKind::Attribute) out.insert(value.text);
    return true;
  });
  return out;
}

}  // namespace

TransformResult strip_decorators(const SourceTree& tree, const std::set<std::string>& allowlist) {
  ChangeRecord record{TransformId::Decorator, {}, {}, {}};
  Rewriter rw(tree);
  std::set<std::string> inspected = inspected_names(tree);
  tree.walk(tree.root(), [&](NodeId id) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Decorator) return true;
    std::string base = decorator_base_name(tree, id);
    const Node& def = tree.node(n.parent);
    if (!allowlist.contains(base)) {
      record.skipped.push_back({"@" + base + " on " + def.text, "not-allowlisted"});
      return false;
    }
    if (inspected.contains(def.text)) {
      record.skipped.push_back({"@" + base + " on " + def.text, "wrapper-attribute-used"});
      return false;
    }
    rw.remove(n.outer_begin, n.outer_end);
    record.edits.push_back(make_edit(tree, n.begin, n.end, 0, "@" + base + " on " + def.text));
    return false;
  });
  return finish(tree, rw, std::move(record));
}

// ---------------------------------------------------------------------------
// casing

namespace {

std::string casing_candidate(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

TransformResult lowercase_variables(const SourceTree& tree) {
  ChangeRecord record{TransformId::Casing, {}, {}, {}};
  ScopeTable table = ScopeTable::build(tree);
  if (!table.rename_unsafe_reason().empty()) {
    record.skip_reason = table.rename_unsafe_reason();
    return {tree, std::move(record)};
  }
  std::vector<BindingId> order(table.bindings().size());
  for (BindingId b = 0; b < order.size(); ++b) order[b] = b;
  std::stable_sort(order.begin(), order.end(), [&](BindingId a, BindingId b) {
    return table.binding(a).first_offset(table) < table.binding(b).first_offset(table);
  });

  Rewriter rw(tree);
  auto in_use = table.names_in_use();
  for (BindingId b : order) {
    const Binding& binding = table.binding(b);
    std::string cand = casing_candidate(binding.name);
    if (cand == binding.name) continue;
    RenameDecision d = rename_is_safe(table, b, cand, in_use);
    if (d != RenameDecision::Safe) {
      record.skipped.push_back({binding.name, std::string(to_string(d))});
      continue;
    }
    in_use.insert(cand);
    std::string detail = binding.name + "->" + cand;
    for (std::size_t occ : binding.occurrences) {
      const Occurrence& o = table.occurrences()[occ];
      rw.replace(o.begin, o.end, cand);
      record.edits.push_back(make_edit(tree, o.begin, o.end, 0, detail));
    }
  }
  return finish(tree, rw, std::move(record));
}

// ---------------------------------------------------------------------------
// docstrings

namespace {

bool is_plain_string_statement(const SourceTree& tree, NodeId stmt) {
  const Node& n = tree.node(stmt);
  if (n.kind != NodeKind::ExprStmt) return false;
  const Node& e = tree.node(n.children[0]);
  return e.kind == NodeKind::String && !e.has(node_flags::kFString) &&
         !e.has(node_flags::kBytes);
}

void strip_body(const SourceTree& tree, NodeId owner, NodeId block, Rewriter& rw,
                ChangeRecord& record) {
  auto stmts = tree.statements(block);
  std::size_t k = 0;
  while (k < stmts.size() && is_plain_string_statement(tree, stmts[k])) ++k;
  if (k == 0) return;
  std::string subject = tree.node(owner).kind == NodeKind::Module ? "<module>"
                                                                    : tree.node(owner).text;
  const Node& first = tree.node(stmts[0]);
  const Node& last = tree.node(stmts[k - 1]);
  if (k == stmts.size()) {
    rw.replace(first.begin, last.end, "pass");
    record.edits.push_back(make_edit(tree, first.begin, last.end, 1, subject));
    return;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const Node& s = tree.node(stmts[i]);
    if (!s.has(node_flags::kLastOnLine)) {
      rw.remove(s.begin, tree.node(stmts[i + 1]).begin);
    } else if (s.has(node_flags::kFirstOnLine)) {
      rw.remove(s.outer_begin, s.outer_end);
    } else {
      rw.remove(s.begin, s.end);
    }
    record.edits.push_back(make_edit(tree, s.begin, s.end, 0, subject));
  }
}

}  // namespace

TransformResult strip_docstrings(const SourceTree& tree) {
  ChangeRecord record{TransformId::Docstring, {}, {}, {}};
  Rewriter rw(tree);
  strip_body(tree, tree.root(), tree.root(), rw, record);
  tree.walk(tree.root(), [&](NodeId id) {
    const Node& n = tree.node(id);
    if (is_function_def(n.kind) || n.kind == NodeKind::ClassDef) {
      strip_body(tree, id, n.children.back(), rw, record);
    }
    return true;
  });
  return finish(tree, rw, std::move(record));
}

}  // namespace restyle
