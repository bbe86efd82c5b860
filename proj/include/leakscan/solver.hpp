#pragma once

#include <string>
#include <vector>

namespace leakscan {

/// Literal: +v or -v for variable v >= 1.
using Lit = int;

inline int lit_var(Lit l) { return l < 0 ? -l : l; }
inline bool lit_sign(Lit l) { return l > 0; }

/// CNF plus native at-most-one side constraints.
struct Formula {
  int num_vars = 0;
  std::vector<std::vector<Lit>> clauses;
  std::vector<std::vector<Lit>> at_most_one;

  int new_var() { return ++num_vars; }

  void add_clause(std::vector<Lit> lits) { clauses.push_back(std::move(lits)); }
  void add_unit(Lit l) { clauses.push_back({l}); }

  /// Groups of size < 2 are kept; they are trivially satisfied but callers
  /// rely on one group existing per constrained object.
  void add_at_most_one(std::vector<Lit> lits) { at_most_one.push_back(std::move(lits)); }
};

enum class SatStatus { Sat, Unsat, Unknown };

struct SatResult {
  SatStatus status = SatStatus::Unknown;
  /// 1-based; model[v] is the value of variable v. Only meaningful for Sat.
  std::vector<bool> model;
  std::string unknown_reason;

  bool sat() const { return status == SatStatus::Sat; }
  bool unsat() const { return status == SatStatus::Unsat; }
};

struct SolveOptions {
  /// Decision budget; exceeding it yields SatStatus::Unknown rather than an
  /// answer, so callers can stay conservative.
  long max_decisions = 5'000'000;
};

/// Complete search (DPLL with unit propagation and native at-most-one
/// propagation). The decision order is fixed: lowest unassigned variable,
/// false tried first, so the returned model is reproducible.
SatResult solve(const Formula& f, const SolveOptions& opts = {});

/// True iff `assignment` (1-based) satisfies every clause and group.
bool evaluates_true(const Formula& f, const std::vector<bool>& assignment);

/// DIMACS text. At-most-one groups are compiled to clauses: pairwise for
/// groups of up to `pairwise_limit` literals, sequential-counter above that
/// (auxiliary variables are appended after num_vars).
std::string to_dimacs(const Formula& f, int pairwise_limit = 6);

/// The clause compilation used by to_dimacs, exposed so the two encodings can
/// be checked against the native semantics.
Formula compile_at_most_one(const Formula& f, int pairwise_limit = 6);

}  // namespace leakscan
