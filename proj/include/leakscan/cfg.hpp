#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "leakscan/extraction.hpp"
#include "leakscan/summaries.hpp"

namespace leakscan {

enum class NodeKind { Entry, Return, Alloc, Free, Branch, Assign, Deref, Escape, Call, Other };
enum class EscapeMode { ReturnedPointer, GlobalStore, SinkCall };
enum class EdgePolarity { True, False, Unconditional };

/// One CFG node. Field use by kind:
///   Alloc:  target = receiving lvalue text, callee = allocation function
///   Free:   value = freed expression, callee + freed_arg locate it in args
///   Branch: value = raw condition text
///   Assign: target = lhs identifier, value = rhs text
///   Return: value = returned expression text ("" for plain return)
///   Escape: value = escaping expression, escape = how it leaves the function
///   Call:   callee + args; target set when the result is assigned
///   Deref:  value = dereferenced expression
struct CfgNode {
  NodeKind kind = NodeKind::Other;
  SourceSpan span;
  std::string target;
  std::string value;
  std::string callee;
  std::vector<std::string> args;
  int freed_arg = -1;
  EscapeMode escape = EscapeMode::ReturnedPointer;
};

struct CfgEdge {
  int from = 0;
  int to = 0;
  EdgePolarity polarity = EdgePolarity::Unconditional;
  bool from_goto = false;
};

/// Condition bookkeeping for a Branch node: `var` is shared across branches
/// whose normalized core text matches; `negated` records how many `!` were
/// peeled (condition true means var == !negated).
struct BranchCond {
  int var = 0;
  bool negated = false;
  std::string core;
};

/// Acyclic intraprocedural CFG. Invariants (checked by validate_cfg):
/// exactly one Entry at index 0, at least one Return, no cycles, Branch nodes
/// have exactly one True and one False successor, other non-Return nodes have
/// exactly one successor, Return nodes have none, all nodes reachable.
struct Cfg {
  std::string function;
  std::string file;
  std::vector<std::string> params;
  std::set<std::string> locals;
  std::vector<CfgNode> nodes;
  std::vector<CfgEdge> edges;
  std::vector<std::vector<int>> succ;  // edge indices; True edge listed before False
  std::vector<std::vector<int>> pred;  // edge indices
  std::map<int, BranchCond> branch_conds;
  int condition_var_count = 0;

  const CfgNode& node(int i) const { return nodes[static_cast<std::size_t>(i)]; }
  int entry() const { return 0; }
  std::vector<int> return_nodes() const;
};

struct CfgBuildOptions {
  std::vector<std::string> alloc_primitives = {"malloc", "calloc",       "realloc",
                                               "strdup", "aligned_alloc", "new"};
  std::vector<std::string> free_primitives = {"free", "delete"};
  /// Calls whose arguments transfer ownership out of the function.
  std::vector<std::string> sink_calls;
  /// Branches with identical normalized condition text share one variable.
  bool share_conditions = true;
};

struct CfgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Builds the acyclic CFG for one record. Loops are linearized to
/// zero-or-one executions of the body, switch statements desugar to an
/// equality branch chain with default as the final false arm, goto follows
/// labels (cycle-forming back jumps fall through instead). Calls to
/// allocation/deallocation primitives or to functions summarized in `hints`
/// become Alloc/Free nodes. Throws CfgError when the body cannot be brought
/// into invariant-satisfying shape.
Cfg build_cfg(const FunctionRecord& rec, const HintsFile& hints,
              const CfgBuildOptions& opts = {});

/// Empty list when invariants hold, else one message per violation.
std::vector<std::string> validate_cfg(const Cfg& cfg);

struct BranchChoice {
  int node = 0;
  bool taken = false;  // polarity of the edge followed at this Branch
  bool operator==(const BranchChoice& o) const { return node == o.node && taken == o.taken; }
};

/// One Entry->Return path.
struct Path {
  std::vector<int> nodes;
  std::vector<BranchChoice> branch_literals;
};

struct PathEnumeration {
  std::vector<Path> paths;
  bool cap_exceeded = false;
};

inline constexpr int kDefaultPathCap = 10'000;

/// Depth-first enumeration in successor order (True arm first). Stops with
/// cap_exceeded once more than `cap` paths exist; the partial list is kept.
PathEnumeration enumerate_paths(const Cfg& cfg, int cap = kDefaultPathCap);

/// Exact number of Entry->Return paths (DAG dynamic programming); used to
/// predict enumeration size without materializing paths.
long long count_paths(const Cfg& cfg);

/// Identifiers transitively copied from `root` by plain identifier-to-
/// identifier assignments, `root` included. Flow-insensitive.
std::set<std::string> self_alias_closure(const Cfg& cfg, const std::string& root);

/// Whitespace/parenthesis-normalized condition text with `!` prefixes peeled;
/// `negated` reports the parity.
std::string normalize_condition(const std::string& raw, bool* negated);

/// Canonical expression spelling used for alias membership tests.
std::string normalize_expr(const std::string& raw);

/// Graphviz dot document for debugging.
std::string to_dot(const Cfg& cfg);

}  // namespace leakscan
