#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leakscan/cfg.hpp"
#include "leakscan/extraction.hpp"
#include "leakscan/solver.hpp"
#include "leakscan/summaries.hpp"

namespace leakscan {

/// Aliases of parameter `param_index`, split by strength: self_aliases are
/// plain copies (v = p chains) and may stand in for the parameter itself;
/// field_derivations (v = p->f chains and the p->f texts themselves) are
/// reachable from it but do not release it. Flow-insensitive over the acyclic
/// CFG: an assignment anywhere contributes.
struct AliasSet {
  int param_index = -1;
  std::set<std::string> self_aliases;
  std::set<std::string> field_derivations;

  bool is_self(const std::string& expr) const;
  bool is_field_derivation(const std::string& expr) const;
};

AliasSet compute_alias_set(const Cfg& cfg, int param_index);

enum class ValidationOutcome { Valid, Rejected, Unknown };

struct ValidationVerdict {
  FunctionSummary summary;
  ValidationOutcome outcome = ValidationOutcome::Rejected;
  Path witness;       // meaningful for Valid
  std::string reason; // human-readable grounds, also used in rejection tables
};

struct ValidationOptions {
  std::vector<std::string> alloc_primitives = {"malloc", "calloc",       "realloc",
                                               "strdup", "aligned_alloc", "new"};
  std::vector<std::string> free_primitives = {"free", "delete"};
  std::vector<std::string> sink_calls;
  int call_depth = 10;          // transitive wrapper bound
  int path_cap = kDefaultPathCap;
  long solver_budget = 5'000'000;
  bool share_conditions = true;
  /// Figure-faithful default: freeing only a field derivation does not
  /// validate a deallocator. The looser prose reading sits behind this flag.
  bool allow_field_frees = false;
};

/// Depth-bounded reachability over the codebase call graph. Queries terminate
/// on recursive graphs via a visited set.
class CallGraphView {
 public:
  CallGraphView(const Codebase& cb, int depth_limit);

  bool reachable(const std::string& from, const std::string& to) const;
  const std::set<std::string>& callees(const std::string& name) const;
  const FunctionRecord* record(const std::string& name) const { return cb_->find(name); }
  const Codebase& codebase() const { return *cb_; }
  int depth_limit() const { return depth_limit_; }

 private:
  const Codebase* cb_;
  int depth_limit_;
};

/// Validates summaries against the code. An allocator claim holds when some
/// feasible path carries a freshly allocated value to a return of it,
/// unkilled (frees of aliases and reassignment of the tracked lvalue kill;
/// partial writes through it do not). A deallocator claim holds when some
/// feasible path hands the parameter (a self alias of it) to a deallocation
/// primitive, directly or through wrapper chains followed to the depth bound.
/// Feasibility means branch literals consistent under shared condition
/// variables. Small graphs are decided by path enumeration; graphs past the
/// path cap fall back to a solver encoding; a solver budget miss is Unknown
/// and callers keep the summary.
class SummaryValidator {
 public:
  SummaryValidator(const Codebase& cb, ValidationOptions opts = {});

  ValidationVerdict validate(const FunctionSummary& s);
  ValidationVerdict validate_allocator(const FunctionSummary& s, const Cfg& cfg,
                                       CallGraphView& calls);
  ValidationVerdict validate_deallocator(const FunctionSummary& s, const Cfg& cfg,
                                         CallGraphView& calls);

  struct Report {
    HintsFile validated;
    std::vector<ValidationVerdict> verdicts;  // input order
  };
  /// Deallocators first, then allocators, then extra rounds until the valid
  /// set stops growing (rejections are re-examined as knowledge accumulates).
  Report validate_all(const std::vector<FunctionSummary>& candidates);

  const Cfg* cfg_for(const std::string& name);  // cached; nullptr if unbuildable

 private:
  friend struct ValidatorImpl;
  const Codebase* cb_;
  ValidationOptions opts_;
  CallGraphView calls_;
  std::map<std::string, Cfg> cfg_cache_;
  std::set<std::string> cfg_failed_;
  // name -> established verdicts, kept only for positives (negatives may be
  // artifacts of in-progress cycles and are re-derived per top-level query)
  std::map<std::string, bool> allocator_memo_;
  std::map<std::pair<std::string, int>, bool> deallocator_memo_;
  std::set<std::string> alloc_in_progress_;
  std::set<std::pair<std::string, int>> dealloc_in_progress_;

  bool callee_is_allocator(const std::string& name, int depth);
  bool callee_is_deallocator(const std::string& name, int arg, int depth);
  struct PathCheck;
  ValidationVerdict check_summary(const FunctionSummary& s, const Cfg& cfg, int depth);
};

/// Delimited text table (name|role|target|outcome|reason), one row per
/// verdict, header included.
std::string rejection_table(const std::vector<ValidationVerdict>& verdicts);

}  // namespace leakscan
