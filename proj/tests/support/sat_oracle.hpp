#pragma once

// Reference decision procedures used to cross-check the production solver and
// encodings. Everything here is deliberately naive: exhaustive enumeration,
// no pruning beyond early exit.

#include <cassert>
#include <optional>
#include <vector>

#include "leakscan/solver.hpp"

namespace leakscan::testsupport {

// Exhaustive truth-table check; first satisfying assignment in counting order
// or nullopt. Guard: refuse ridiculous enumerations.
inline std::optional<std::vector<bool>> oracle_solve(const Formula& f) {
  assert(f.num_vars <= 24);
  const int n = f.num_vars;
  std::vector<bool> assignment(static_cast<std::size_t>(n) + 1, false);
  const unsigned long long total = 1ull << n;
  for (unsigned long long bits = 0; bits < total; ++bits) {
    for (int v = 1; v <= n; ++v) assignment[static_cast<std::size_t>(v)] = (bits >> (v - 1)) & 1u;
    if (evaluates_true(f, assignment)) return assignment;
  }
  return std::nullopt;
}

inline bool oracle_satisfiable(const Formula& f) { return oracle_solve(f).has_value(); }

}  // namespace leakscan::testsupport
