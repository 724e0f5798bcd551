#pragma once

// Lexical scopes and name bindings for a SourceTree.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "restyle/syntax.hpp"

namespace restyle {

enum class ScopeKind : std::uint8_t { Module, Function, Class, Comprehension };

enum class BindingKind : std::uint8_t {
  Parameter,
  AssignmentTarget,  // =, augmented and annotated assignment, walrus
  FunctionName,
  ClassName,
  Import,
  ComprehensionVariable,
  LoopVariable,
  Other,  // with/except targets, match captures, del
};

std::string_view to_string(BindingKind kind);

using ScopeId = std::uint32_t;
using BindingId = std::uint32_t;
inline constexpr BindingId kNoBinding = 0xffffffffu;

class ScopeTable;

/// One occurrence of an identifier: a binding site, a declaration or a load.
struct Occurrence {
  NodeId node;           // Name, Param, FunctionDef, ClassDef
  ScopeId scope;         // scope the occurrence is evaluated in
  std::uint32_t begin;   // span of the identifier itself
  std::uint32_t end;
  bool binds;
  BindingId binding;     // kNoBinding when unresolved (builtins, missing globals)
};

struct Binding {
  std::string name;
  std::uint8_t kinds = 0;  // bit per BindingKind
  ScopeId scope;
  std::vector<std::size_t> occurrences;  // indices into ScopeTable::occurrences(), source order
  bool name_observed = false;            // name printed by an f-string `{x=}` field

  bool has(BindingKind k) const { return (kinds >> static_cast<int>(k)) & 1u; }
  std::vector<BindingKind> kind_list() const;
  std::uint32_t first_offset(const ScopeTable& table) const;
};

struct Scope {
  ScopeKind kind;
  ScopeId parent;
  NodeId node;
  std::map<std::string, BindingId, std::less<>> bindings;
  std::unordered_set<std::string> globals;
  std::unordered_set<std::string> nonlocals;
};

/// Holds a pointer to the tree it was built from; the tree must outlive it.
class ScopeTable {
 public:
  static ScopeTable build(const SourceTree& tree);

  const SourceTree& tree() const { return *tree_; }
  const std::vector<Scope>& scopes() const { return scopes_; }
  const Scope& scope(ScopeId id) const { return scopes_[id]; }
  const std::vector<Binding>& bindings() const { return bindings_; }
  const Binding& binding(BindingId id) const { return bindings_[id]; }
  const std::vector<Occurrence>& occurrences() const { return occurrences_; }

  /// Binding named `name` declared directly in scope, if any.
  BindingId find(ScopeId scope, std::string_view name) const;
  /// Occurrence recorded for a node (Name, Param, def or class), if any.
  const Occurrence* occurrence_at(NodeId node) const;
  /// Scope created by a def, lambda, class or comprehension node.
  std::optional<ScopeId> scope_of_node(NodeId node) const;
  bool is_within(ScopeId inner, ScopeId outer) const;

  /// Non-empty ("dynamic-code", "star-import") when renaming anything in
  /// the program is unsafe.
  const std::string& rename_unsafe_reason() const { return unsafe_reason_; }

  /// Every identifier bound or referenced anywhere, plus builtins.
  const std::unordered_set<std::string>& names_in_use() const { return names_in_use_; }
  /// Names bound as a parameter anywhere in the program.
  const std::unordered_set<std::string>& parameter_names() const { return parameter_names_; }
  const std::unordered_set<std::string>& function_and_class_names() const { return def_names_; }

 private:
  friend class ScopeBuilder;
  const SourceTree* tree_ = nullptr;
  std::vector<Scope> scopes_;
  std::vector<Binding> bindings_;
  std::vector<Occurrence> occurrences_;
  std::unordered_map<NodeId, std::size_t> occurrence_by_node_;
  std::unordered_map<NodeId, ScopeId> scope_by_node_;
  std::string unsafe_reason_;
  std::unordered_set<std::string> names_in_use_;
  std::unordered_set<std::string> parameter_names_;
  std::unordered_set<std::string> def_names_;
};

enum class RenameDecision : std::uint8_t {
  Safe,
  ConflictExistingName,
  ReservedKeyword,
  AliasesFunctionOrClass,
  NotAssignmentBound,
  InvalidIdentifier,
  NameObserved,
};

std::string_view to_string(RenameDecision d);

/// Checks, in order: keyword, identifier syntax, binding eligibility,
/// function/class aliasing, and collision with `in_use`.
RenameDecision rename_is_safe(const ScopeTable& table, BindingId binding,
                              std::string_view candidate,
                              const std::unordered_set<std::string>& in_use);
inline RenameDecision rename_is_safe(const ScopeTable& table, BindingId binding,
                                     std::string_view candidate) {
  return rename_is_safe(table, binding, candidate, table.names_in_use());
}

bool is_identifier(std::string_view s);
const std::unordered_set<std::string>& builtin_names();

}  // namespace restyle
