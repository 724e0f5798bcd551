// Extract-method over duplicated statement windows.
//
// A window is a run of >= 2 consecutive statements of one block inside a
// function body. Windows are compared by a canonical serialization of their
// trees in which every non-global name becomes $k, numbered by first
// appearance. Matching windows become calls to a new module-level function.

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>

#include "restyle/transforms.hpp"
#include "transform_util.hpp"

namespace restyle {

namespace {

struct Window {
  NodeId function;
  ScopeId fscope;
  NodeId block;
  std::size_t first;
  std::size_t last;
  std::uint32_t begin;  // outer span of the whole window
  std::uint32_t end;
  std::string canonical;
  std::vector<BindingId> slots;      // canonical index -> binding
  std::vector<std::size_t> params;   // canonical indices
  std::optional<std::size_t> live_out;
  bool valid = true;
};

class ReuseAnalyzer {
 public:
  ReuseAnalyzer(const SourceTree& tree, const ScopeTable& table) : tree_(tree), table_(table) {}

  // Windows grouped by canonical form; only groups with >= 2 members.
  std::vector<std::vector<Window>> groups() {
    collect_blocks();
    std::unordered_map<std::uint64_t, std::vector<Window>> by_shape;
    for (const auto& blk : blocks_) {
      auto stmts = tree_.statements(blk.block);
      for (std::size_t i = 0; i < stmts.size(); ++i) {
        if (!statement_ok(stmts[i], blk.fscope)) continue;
        if (!tree_.node(stmts[i]).has(node_flags::kFirstOnLine)) continue;
        std::uint64_t h = 1469598103934665603ull;
        for (std::size_t j = i; j < stmts.size(); ++j) {
          if (!statement_ok(stmts[j], blk.fscope)) break;
          h = (h ^ shape_hash(stmts[j])) * 1099511628211ull;
          if (j == i || !tree_.node(stmts[j]).has(node_flags::kLastOnLine)) continue;
          std::uint64_t key = h ^ (static_cast<std::uint64_t>(j - i) << 56);
          Window w{blk.function, blk.fscope, blk.block, i, j,
                   tree_.node(stmts[i]).outer_begin, tree_.node(stmts[j]).outer_end,
                   {}, {}, {}, {}, true};
          by_shape[key].push_back(std::move(w));
        }
      }
    }
    std::map<std::string, std::vector<Window>> by_canonical;
    for (auto& [key, windows] : by_shape) {
      if (windows.size() < 2) continue;
      for (auto& w : windows) {
        canonicalize(w);
        by_canonical[w.canonical].push_back(std::move(w));
      }
    }
    std::vector<std::vector<Window>> out;
    for (auto& [canon, windows] : by_canonical) {
      if (windows.size() < 2) continue;
      for (auto& w : windows) analyze_flow(w);
      std::sort(windows.begin(), windows.end(),
                [](const Window& a, const Window& b) { return a.begin < b.begin; });
      out.push_back(std::move(windows));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      std::size_t la = a.front().last - a.front().first;
      std::size_t lb = b.front().last - b.front().first;
      if (la != lb) return la > lb;
      return a.front().begin < b.front().begin;
    });
    return out;
  }

  std::string slot_name(const Window& w, std::size_t slot) const {
    return table_.binding(w.slots[slot]).name;
  }

 private:
  struct BlockInfo {
    NodeId function;
    ScopeId fscope;
    NodeId block;
  };

  void collect_blocks() {
    tree_.walk(tree_.root(), [&](NodeId id) {
      const Node& n = tree_.node(id);
      if (n.kind != NodeKind::Block || n.has(node_flags::kInline)) return true;
      NodeId f = enclosing_function(id);
      if (f != kNoNode) blocks_.push_back({f, *table_.scope_of_node(f), id});
      return true;
    });
  }

  NodeId enclosing_function(NodeId id) const {
    for (NodeId p = tree_.node(id).parent; p != kNoNode; p = tree_.node(p).parent) {
      NodeKind k = tree_.node(p).kind;
      if (is_function_def(k)) return p;
      if (k == NodeKind::ClassDef || k == NodeKind::Lambda) return kNoNode;
    }
    return kNoNode;
  }

  bool is_local(BindingId b) const {
    return b != kNoBinding && table_.scope(table_.binding(b).scope).kind != ScopeKind::Module;
  }

  ScopeId nearest_non_comprehension(ScopeId s) const {
    while (table_.scope(s).kind == ScopeKind::Comprehension) s = table_.scope(s).parent;
    return s;
  }

  // Statement-local extractability; cached per statement.
  bool statement_ok(NodeId stmt, ScopeId fscope) {
    auto it = ok_cache_.find(stmt);
    if (it != ok_cache_.end()) return it->second;
    bool ok = check_statement(stmt, fscope, 0);
    ok_cache_[stmt] = ok;
    return ok;
  }

  bool check_statement(NodeId id, ScopeId fscope, int loop_depth) const {
    const Node& n = tree_.node(id);
    switch (n.kind) {
      case NodeKind::Return:
      case NodeKind::Yield:
      case NodeKind::YieldFrom:
      case NodeKind::Await:
      case NodeKind::Lambda:
      case NodeKind::FunctionDef:
      case NodeKind::AsyncFunctionDef:
      case NodeKind::ClassDef:
      case NodeKind::Global:
      case NodeKind::Nonlocal:
      case NodeKind::Delete:
        return false;
      case NodeKind::Break:
      case NodeKind::Continue:
        if (loop_depth == 0) return false;
        break;
      case NodeKind::For:
      case NodeKind::With:
      case NodeKind::Comprehension:
        if (n.has(node_flags::kAsync)) return false;
        break;
      case NodeKind::Name: {
        const Occurrence* occ = table_.occurrence_at(id);
        // zero-argument super() needs the __class__ cell of the method
        if (n.text == "super" || n.text == "__class__") return false;
        if (!occ || occ->binding == kNoBinding) break;
        const Binding& b = table_.binding(occ->binding);
        ScopeKind bk = table_.scope(b.scope).kind;
        if (bk == ScopeKind::Comprehension) break;
        if (occ->binds && b.scope != fscope) return false;  // global or nonlocal write
        if (b.scope == fscope) {
          for (std::size_t o : b.occurrences) {
            if (nearest_non_comprehension(table_.occurrences()[o].scope) != fscope) return false;
          }
        }
        break;
      }
      default:
        break;
    }
    bool loop = n.kind == NodeKind::For || n.kind == NodeKind::While;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      // the else-block of a loop is not inside the loop
      bool in_loop = loop && !(i + 1 == n.children.size());
      if (!check_statement(n.children[i], fscope, loop_depth + (in_loop ? 1 : 0))) return false;
    }
    return true;
  }

  // ---- serialization ----
  void masked(std::string& out, std::uint32_t b, std::uint32_t e,
              std::vector<std::pair<std::uint32_t, std::uint32_t>> holes,
              std::string_view fill) const {
    std::sort(holes.begin(), holes.end());
    std::uint32_t cur = b;
    for (auto [hb, he] : holes) {
      if (hb < cur || he > e) continue;
      out.append(tree_.slice(cur, hb));
      out.append(fill);
      cur = he;
    }
    out.append(tree_.slice(cur, e));
  }

  void string_skeleton(std::string& out, NodeId id) const {
    const Node& n = tree_.node(id);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> holes;
    for (NodeId c : n.children) holes.push_back({tree_.node(c).begin, tree_.node(c).end});
    auto toks = tree_.tokens();
    auto it = std::lower_bound(toks.begin(), toks.end(), n.begin,
                               [](const Token& t, std::uint32_t off) { return t.begin < off; });
    for (; it != toks.end() && it->begin < n.end; ++it) {
      if (it->kind != TokenKind::String) continue;
      masked(out, it->begin, it->end, holes, "{}");
      out += ' ';
    }
  }

  void field_skeleton(std::string& out, NodeId id) const {
    const Node& n = tree_.node(id);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> holes;
    const Node& expr = tree_.node(n.children[0]);
    holes.push_back({expr.outer_begin, expr.outer_end});
    for (std::size_t i = 1; i < n.children.size(); ++i) {
      holes.push_back({tree_.node(n.children[i]).begin, tree_.node(n.children[i]).end});
    }
    masked(out, n.begin, n.end, holes, "");
  }

  // slots == nullptr: shape only, all locals print as "$".
  void serialize(std::string& out, NodeId id, std::vector<BindingId>* slots) const {
    const Node& n = tree_.node(id);
    out += '(';
    out += to_string(n.kind);
    if (n.kind == NodeKind::Name) {
      const Occurrence* occ = table_.occurrence_at(id);
      BindingId b = occ ? occ->binding : kNoBinding;
      if (is_local(b)) {
        out += " $";
        if (slots) {
          auto pos = std::find(slots->begin(), slots->end(), b);
          if (pos == slots->end()) {
            slots->push_back(b);
            pos = slots->end() - 1;
          }
          out += std::to_string(pos - slots->begin());
        }
      } else {
        out += ' ';
        out += n.text;
      }
    } else if (n.kind == NodeKind::String) {
      out += ' ';
      if (n.has(node_flags::kFString)) {
        string_skeleton(out, id);
      } else {
        out += n.text;
      }
    } else if (n.kind == NodeKind::FormattedValue) {
      out += ' ';
      field_skeleton(out, id);
    } else if (!n.text.empty()) {
      out += ' ';
      out += n.text;
    }
    out += ' ';
    out += std::to_string(static_cast<int>(n.ctx));
    out += std::to_string(n.flags & (node_flags::kAsync | node_flags::kSelfDoc));
    for (NodeId c : n.children) serialize(out, c, slots);
    out += ')';
  }

  std::uint64_t shape_hash(NodeId stmt) {
    auto it = shape_cache_.find(stmt);
    if (it != shape_cache_.end()) return it->second;
    std::string s;
    serialize(s, stmt, nullptr);
    std::uint64_t h = std::hash<std::string>{}(s);
    shape_cache_[stmt] = h;
    return h;
  }

  void canonicalize(Window& w) const {
    auto stmts = tree_.statements(w.block);
    for (std::size_t i = w.first; i <= w.last; ++i) serialize(w.canonical, stmts[i], &w.slots);
  }

  // ---- data flow ----
  struct Flow {
    const Window* w;
    std::vector<std::pair<std::uint32_t, BindingId>> reads;  // reads before definite write
    std::set<BindingId> written;
  };

  bool binds_local(const Occurrence* occ, ScopeId fscope) const {
    return occ && occ->binds && occ->binding != kNoBinding &&
           table_.binding(occ->binding).scope == fscope;
  }

  // Reads of locals in an expression-ish subtree, then its definite writes.
  void simple(NodeId id, std::set<BindingId>& defined, Flow& f, bool record_writes = true) const {
    std::vector<BindingId> writes;
    tree_.walk(id, [&](NodeId c) {
      const Node& n = tree_.node(c);
      if (n.kind != NodeKind::Name) return true;
      const Occurrence* occ = table_.occurrence_at(c);
      if (!occ || !is_local(occ->binding)) return true;
      BindingId b = occ->binding;
      if (table_.scope(table_.binding(b).scope).kind == ScopeKind::Comprehension) return true;
      const Node& parent = tree_.node(n.parent);
      bool aug = parent.kind == NodeKind::AugAssign && parent.children[0] == c;
      if (!occ->binds || aug) {
        if (!defined.contains(b)) f.reads.push_back({occ->begin, b});
      }
      if (occ->binds) {
        f.written.insert(b);
        bool walrus = tree_.node(n.parent).kind == NodeKind::NamedExpr;
        if (!walrus) writes.push_back(b);
      }
      return true;
    });
    if (record_writes) defined.insert(writes.begin(), writes.end());
  }

  void block(NodeId id, std::set<BindingId>& defined, Flow& f) const {
    if (tree_.node(id).kind == NodeKind::Empty) return;
    for (NodeId s : tree_.statements(id)) statement(s, defined, f);
  }

  void statement(NodeId id, std::set<BindingId>& defined, Flow& f) const {
    const Node& n = tree_.node(id);
    const auto& k = n.children;
    switch (n.kind) {
      case NodeKind::If: {
        simple(k[0], defined, f);
        auto a = defined;
        auto b = defined;
        block(k[1], a, f);
        block(k[2], b, f);
        for (BindingId x : a) {
          if (b.contains(x)) defined.insert(x);
        }
        return;
      }
      case NodeKind::While: {
        simple(k[0], defined, f);
        auto a = defined;
        block(k[1], a, f);
        auto b = defined;
        block(k[2], b, f);
        return;
      }
      case NodeKind::For: {
        simple(k[1], defined, f);
        auto a = defined;
        simple(k[0], a, f);
        block(k[2], a, f);
        auto b = defined;
        block(k[3], b, f);
        return;
      }
      case NodeKind::Try: {
        auto body = defined;
        block(k[0], body, f);
        for (std::size_t i = 1; i + 2 < k.size(); ++i) {
          auto h = defined;
          const Node& handler = tree_.node(k[i]);
          simple(handler.children[0], h, f);
          simple(handler.children[1], h, f);
          block(handler.children[2], h, f);
        }
        auto orelse = body;
        block(k[k.size() - 2], orelse, f);
        block(k[k.size() - 1], defined, f);
        return;
      }
      case NodeKind::With: {
        for (std::size_t i = 0; i + 1 < k.size(); ++i) simple(k[i], defined, f);
        block(k.back(), defined, f);
        return;
      }
      case NodeKind::Match: {
        simple(k[0], defined, f);
        for (std::size_t i = 1; i < k.size(); ++i) {
          auto c = defined;
          const Node& mc = tree_.node(k[i]);
          simple(mc.children[0], c, f);
          simple(mc.children[1], c, f);
          block(mc.children[2], c, f);
        }
        return;
      }
      default:
        simple(id, defined, f);
    }
  }

  bool inside(std::uint32_t off, const Window& w) const { return off >= w.begin && off < w.end; }

  void analyze_flow(Window& w) const {
    Flow f{&w, {}, {}};
    std::set<BindingId> defined;
    auto stmts = tree_.statements(w.block);
    for (std::size_t i = w.first; i <= w.last; ++i) statement(stmts[i], defined, f);

    std::set<BindingId> param_set;
    for (auto [off, b] : f.reads) param_set.insert(b);

    // Enclosing loops within the function.
    std::vector<NodeId> loops;
    for (NodeId p = tree_.node(w.block).parent; p != w.function; p = tree_.node(p).parent) {
      NodeKind k = tree_.node(p).kind;
      if (k == NodeKind::For || k == NodeKind::While) loops.push_back(p);
    }

    std::set<BindingId> live;
    for (BindingId b : f.written) {
      const Binding& bd = table_.binding(b);
      bool is_live = !loops.empty() && param_set.contains(b);
      for (std::size_t o : bd.occurrences) {
        const Occurrence& occ = table_.occurrences()[o];
        if (inside(occ.begin, w)) continue;
        bool reads = !occ.binds || tree_.node(tree_.node(occ.node).parent).kind == NodeKind::AugAssign;
        if (!reads) continue;
        if (occ.begin >= w.end) is_live = true;
        for (NodeId l : loops) {
          const Node& ln = tree_.node(l);
          if (occ.begin >= ln.begin && occ.begin < ln.end) is_live = true;
        }
      }
      if (is_live) live.insert(b);
    }
    if (live.size() > 1) {
      w.valid = false;
      return;
    }
    if (!live.empty()) {
      BindingId v = *live.begin();
      auto slot = std::find(w.slots.begin(), w.slots.end(), v) - w.slots.begin();
      w.live_out = static_cast<std::size_t>(slot);
      // A conditionally assigned result must arrive with its old value.
      if (!defined.contains(v)) param_set.insert(v);
    }

    for (std::size_t s = 0; s < w.slots.size(); ++s) {
      if (param_set.contains(w.slots[s])) w.params.push_back(s);
    }
    for (std::size_t s : w.params) {
      if (!has_value_at_call(w, s)) w.valid = false;
    }
  }

 public:
  // Whether the slot's variable can already hold a value where the call
  // replaces the window.
  bool has_value_at_call(const Window& w, std::size_t slot) const {
    const Binding& b = table_.binding(w.slots[slot]);
    if (b.has(BindingKind::Parameter) || b.scope != w.fscope) return true;
    for (std::size_t o : b.occurrences) {
      const Occurrence& occ = table_.occurrences()[o];
      if (occ.binds && occ.begin < w.begin) return true;
    }
    return false;
  }

 private:

  const SourceTree& tree_;
  const ScopeTable& table_;
  std::vector<BlockInfo> blocks_;
  std::unordered_map<NodeId, bool> ok_cache_;
  std::unordered_map<NodeId, std::uint64_t> shape_cache_;
};

ReuseCandidate to_candidate(const ReuseAnalyzer& a, const Window& w) {
  ReuseCandidate c{w.function, w.block, w.first, w.last, w.begin, w.end, w.canonical, {}, {}, w.valid};
  for (std::size_t s : w.params) c.parameters.push_back(a.slot_name(w, s));
  if (w.live_out) c.live_out = a.slot_name(w, *w.live_out);
  return c;
}

// Body of the extracted function: the window's lines re-indented one level
// below module scope.
std::string reindent(const SourceTree& tree, const Window& w, std::string_view unit) {
  std::string_view old_indent = tree.indentation_at(w.begin);
  std::string out;
  std::uint32_t pos = w.begin;
  while (pos < w.end) {
    std::uint32_t eol = pos;
    while (eol < w.end && tree.text()[eol] != '\n') ++eol;
    std::string_view line = tree.slice(pos, eol);
    if (tree.line_starts_inside_string(pos)) {
      out += line;
    } else if (line.find_first_not_of(" \t\f") == std::string_view::npos) {
      // blank line: drop trailing whitespace
    } else {
      std::size_t strip = 0;
      while (strip < old_indent.size() && strip < line.size() && line[strip] == old_indent[strip]) {
        ++strip;
      }
      out += unit;
      out += line.substr(strip);
    }
    out += '\n';
    pos = eol + 1;
  }
  return out;
}

NodeId top_level_statement(const SourceTree& tree, NodeId id) {
  NodeId cur = id;
  while (tree.node(cur).parent != tree.root()) cur = tree.node(cur).parent;
  return cur;
}

bool overlaps(const Window& a, const Window& b) { return a.begin < b.end && b.begin < a.end; }

}  // namespace

std::vector<ReuseCandidate> reuse_candidates(const SourceTree& tree, const ScopeTable& table) {
  ReuseAnalyzer analyzer(tree, table);
  std::vector<ReuseCandidate> out;
  for (const auto& group : analyzer.groups()) {
    for (const auto& w : group) out.push_back(to_candidate(analyzer, w));
  }
  return out;
}

TransformResult extract_duplicates(const SourceTree& tree) {
  ChangeRecord record{TransformId::Reuse, {}, {}, {}};
  ScopeTable table = ScopeTable::build(tree);
  // locals()/eval() would observe the moved variables
  if (!table.rename_unsafe_reason().empty()) {
    record.skip_reason = table.rename_unsafe_reason();
    return {tree, std::move(record)};
  }
  ReuseAnalyzer analyzer(tree, table);
  auto groups = analyzer.groups();

  std::vector<Window> taken;
  auto in_use = table.names_in_use();
  int next_id = 0;
  Rewriter rw(tree);

  for (auto& group : groups) {
    std::vector<const Window*> chosen;
    for (const auto& w : group) {
      if (!w.valid) continue;
      bool clash = std::any_of(taken.begin(), taken.end(),
                               [&](const Window& t) { return overlaps(t, w); }) ||
                   std::any_of(chosen.begin(), chosen.end(),
                               [&](const Window* c) { return overlaps(*c, w); });
      if (!clash) chosen.push_back(&w);
    }
    if (chosen.size() < 2) continue;
    std::optional<std::size_t> live;
    bool consistent = true;
    for (const Window* w : chosen) {
      if (!w->live_out) continue;
      if (live && *live != *w->live_out) consistent = false;
      live = w->live_out;
    }
    if (!consistent) {
      record.skipped.push_back({"window at line " + std::to_string(tree.position(chosen[0]->begin).line),
                                "multiple-live-out"});
      continue;
    }
    // Parameter slots are the union over occurrences.
    std::set<std::size_t> param_slots;
    for (const Window* w : chosen) param_slots.insert(w->params.begin(), w->params.end());
    bool bound = std::all_of(chosen.begin(), chosen.end(), [&](const Window* w) {
      return std::all_of(param_slots.begin(), param_slots.end(),
                         [&](std::size_t s) { return analyzer.has_value_at_call(*w, s); });
    });
    if (!bound) {
      record.skipped.push_back({"window at line " + std::to_string(tree.position(chosen[0]->begin).line),
                                "unbound-parameter"});
      continue;
    }

    std::string name;
    do {
      name = "extracted_" + std::to_string(next_id++);
    } while (in_use.contains(name));
    in_use.insert(name);

    const Window& model = *chosen.front();
    std::string_view model_indent = tree.indentation_at(model.begin);
    std::string unit = model_indent.find('\t') != std::string_view::npos ? "\t" : "    ";
    auto arg_list = [&](const Window& w) {
      std::string s;
      for (std::size_t slot : param_slots) {
        if (!s.empty()) s += ", ";
        s += analyzer.slot_name(w, slot);
      }
      return s;
    };
    std::string def = "def " + name + "(" + arg_list(model) + "):\n" + reindent(tree, model, unit);
    if (live) def += unit + "return " + analyzer.slot_name(model, *live) + "\n";
    def += "\n\n";

    std::uint32_t insert_at = tree.text().size();
    std::vector<int> call_lines;
    for (const Window* w : chosen) {
      NodeId top = top_level_statement(tree, w->block);
      insert_at = std::min(insert_at, tree.node(top).outer_begin);
      std::string call(tree.indentation_at(w->begin));
      if (live) call += analyzer.slot_name(*w, *live) + " = ";
      call += name + "(" + arg_list(*w) + ")\n";
      rw.replace(w->begin, w->end, call);
      record.edits.push_back(detail::make_edit(tree, w->begin, w->end, 1, name));
      call_lines.push_back(tree.position(w->begin).line);
      taken.push_back(*w);
    }
    rw.insert(insert_at, def);
    std::string where = "def " + name + " before line " +
                        std::to_string(tree.position(insert_at).line) + ", called at lines";
    for (int l : call_lines) where += " " + std::to_string(l);
    record.edits.push_back(detail::make_edit(tree, insert_at, insert_at, 1, where));
  }
  return detail::finish(tree, rw, std::move(record));
}

}  // namespace restyle
