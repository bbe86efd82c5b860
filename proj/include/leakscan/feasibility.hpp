#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leakscan/analyzer_bridge.hpp"
#include "leakscan/cfg.hpp"
#include "leakscan/solver.hpp"
#include "leakscan/summaries.hpp"

namespace leakscan {

struct LeakOptions {
  bool share_conditions = true;
  /// Interpret branches that null-test the tracked pointer after its
  /// allocation: a leak needs the allocation to have succeeded, so those
  /// guards are pinned to the non-null polarity. This is what keeps the
  /// `if (!p) return;` failure arm of an allocation from being reported.
  bool success_guards = true;
  long solver_budget = 5'000'000;
  int path_cap = kDefaultPathCap;
};

/// Boolean structure of one allocation site's leak question.
///   - one selection variable per edge, at-most-one incoming per node
///   - a node is reached iff one of its incoming edges is selected; Entry is
///     always reached; a selected edge requires its source reached
///   - a Branch's outgoing edge asserts the branch condition literal with the
///     edge's polarity (conditions shared by normalized text when enabled)
///   - alloc/freed/escaped state holds at a node iff inherited over the
///     selected incoming edge, or set here: the tracked site sets alloc,
///     a Free of a self alias sets freed, an Escape of one sets escaped
struct LeakEncoding {
  Formula formula;
  std::vector<int> edge_vars;   // per edge index
  std::vector<int> reach_vars;  // per node
  struct StateVars {
    int alloc = 0, freed = 0, escaped = 0;
  };
  std::vector<StateVars> state_vars;
  std::map<int, int> branch_literal_vars;  // branch node -> condition var
  std::vector<Lit> guard_units;            // success-guard pinnings applied
  int site = -1;
  std::string tracked;
  std::set<std::string> aliases;  // self aliases of the tracked lvalue
};

/// Throws std::invalid_argument unless `allocation_site` is an Alloc node.
LeakEncoding encode_leak_feasibility(const Cfg& cfg, int allocation_site,
                                     const LeakOptions& opts = {});

enum class Feasibility { Feasible, Infeasible, Unknown };

struct FeasibilityVerdict {
  Feasibility status = Feasibility::Unknown;
  Path witness;        // meaningful for Feasible
  int leak_return = -1;  // Return node the witness leaks through
  std::string reason;
};

/// Asks, return by return in node order, whether the value allocated at the
/// site can reach that return unfreed and unescaped along a feasible path;
/// first Sat wins and its model is decoded into the witness path. A solver
/// budget miss is Unknown (callers keep the warning).
FeasibilityVerdict check_leak_feasible(const Cfg& cfg, int allocation_site,
                                       const LeakOptions& opts = {});

struct StateTriple {
  bool alloc = false, freed = false, escaped = false;
};

/// Straight-line interpreter of node effects along a path; independent check
/// that a claimed witness really ends (alloc, !freed, !escaped).
StateTriple replay_path(const Cfg& cfg, const Path& path, int allocation_site);

/// Per-branch leak scan of one function: a warning per allocation site whose
/// leak question is feasible, carrying the witness as its trace and flagging
/// early-return / goto-exit shapes in the message. Warnings dedup on
/// (file, function, allocation line, leaking return line).
std::vector<Warning> scan_function(const FunctionRecord& rec, const HintsFile& hints,
                                   const CfgBuildOptions& build_opts = {},
                                   const LeakOptions& opts = {},
                                   std::vector<std::string>* diagnostics = nullptr);

struct FilterOutcome {
  std::vector<Warning> retained;
  std::vector<Warning> discarded;
};

/// Feasibility filter over analyzer warnings. The reported allocation site is
/// matched against the function's Alloc nodes within +/-2 lines (all sites
/// when nothing matches); the warning survives iff some matched site is
/// Feasible or Unknown. Warnings naming functions that cannot be resolved or
/// built are retained with a "not-analyzable" tag.
FilterOutcome filter_warnings(const std::vector<Warning>& warnings, const Codebase& cb,
                              const HintsFile& hints, const CfgBuildOptions& build_opts = {},
                              const LeakOptions& opts = {},
                              std::vector<std::string>* diagnostics = nullptr);

}  // namespace leakscan
