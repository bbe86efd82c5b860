#include "leakscan/solver.hpp"

#include <algorithm>
#include <sstream>

namespace leakscan {

namespace {

// -1 unassigned, 0 false, 1 true
struct Search {
  const Formula& f;
  const SolveOptions& opts;
  std::vector<signed char> value;
  std::vector<int> trail;
  long decisions = 0;
  bool budget_hit = false;

  explicit Search(const Formula& formula, const SolveOptions& o)
      : f(formula), opts(o), value(static_cast<std::size_t>(formula.num_vars) + 1, -1) {}

  signed char lit_value(Lit l) const {
    signed char v = value[static_cast<std::size_t>(lit_var(l))];
    if (v < 0) return -1;
    return (v == 1) == lit_sign(l) ? 1 : 0;
  }

  bool assign(Lit l) {
    int var = lit_var(l);
    signed char cur = value[static_cast<std::size_t>(var)];
    signed char want = lit_sign(l) ? 1 : 0;
    if (cur >= 0) return cur == want;
    value[static_cast<std::size_t>(var)] = want;
    trail.push_back(var);
    return true;
  }

  void undo_to(std::size_t mark) {
    while (trail.size() > mark) {
      value[static_cast<std::size_t>(trail.back())] = -1;
      trail.pop_back();
    }
  }

  // full-scan propagation to fixpoint; formulas here are small enough that
  // watched literals would be noise
  bool propagate() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& cl : f.clauses) {
        int unassigned = 0;
        Lit last = 0;
        bool satisfied = false;
        for (Lit l : cl) {
          signed char v = lit_value(l);
          if (v == 1) {
            satisfied = true;
            break;
          }
          if (v < 0) {
            ++unassigned;
            last = l;
          }
        }
        if (satisfied) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          if (!assign(last)) return false;
          changed = true;
        }
      }
      for (const auto& group : f.at_most_one) {
        int true_count = 0;
        for (Lit l : group)
          if (lit_value(l) == 1) ++true_count;
        if (true_count > 1) return false;
        if (true_count == 1) {
          for (Lit l : group) {
            if (lit_value(l) < 0) {
              if (!assign(-l)) return false;
              changed = true;
            }
          }
        }
      }
    }
    return true;
  }

  int pick_branch_var() const {
    for (int v = 1; v <= f.num_vars; ++v)
      if (value[static_cast<std::size_t>(v)] < 0) return v;
    return 0;
  }

  bool search() {
    if (!propagate()) return false;
    int var = pick_branch_var();
    if (var == 0) return true;
    if (++decisions > opts.max_decisions) {
      budget_hit = true;
      return false;
    }
    for (signed char want : {0, 1}) {  // false first: fixed order pins the model
      std::size_t mark = trail.size();
      value[static_cast<std::size_t>(var)] = want;
      trail.push_back(var);
      if (search()) return true;
      undo_to(mark);
      if (budget_hit) return false;
    }
    return false;
  }
};

}  // namespace

SatResult solve(const Formula& f, const SolveOptions& opts) {
  Search s(f, opts);
  SatResult r;
  if (s.search()) {
    r.status = SatStatus::Sat;
    r.model.assign(static_cast<std::size_t>(f.num_vars) + 1, false);
    for (int v = 1; v <= f.num_vars; ++v) r.model[static_cast<std::size_t>(v)] = s.value[static_cast<std::size_t>(v)] == 1;
  } else if (s.budget_hit) {
    r.status = SatStatus::Unknown;
    r.unknown_reason = "decision budget exhausted (" + std::to_string(opts.max_decisions) + ")";
  } else {
    r.status = SatStatus::Unsat;
  }
  return r;
}

bool evaluates_true(const Formula& f, const std::vector<bool>& assignment) {
  auto lit_true = [&](Lit l) {
    bool v = assignment[static_cast<std::size_t>(lit_var(l))];
    return lit_sign(l) ? v : !v;
  };
  for (const auto& cl : f.clauses) {
    bool sat = false;
    for (Lit l : cl)
      if (lit_true(l)) {
        sat = true;
        break;
      }
    if (!sat) return false;
  }
  for (const auto& group : f.at_most_one) {
    int count = 0;
    for (Lit l : group)
      if (lit_true(l)) ++count;
    if (count > 1) return false;
  }
  return true;
}

Formula compile_at_most_one(const Formula& f, int pairwise_limit) {
  Formula out;
  out.num_vars = f.num_vars;
  out.clauses = f.clauses;
  for (const auto& group : f.at_most_one) {
    if (group.size() < 2) continue;
    if (static_cast<int>(group.size()) <= pairwise_limit) {
      for (std::size_t i = 0; i < group.size(); ++i)
        for (std::size_t j = i + 1; j < group.size(); ++j)
          out.add_clause({-group[i], -group[j]});
      continue;
    }
    // sequential counter: s_i tracks "one of the first i literals is true"
    const std::size_t k = group.size();
    std::vector<int> s(k - 1);
    for (auto& v : s) v = out.new_var();
    for (std::size_t i = 0; i + 1 < k; ++i) out.add_clause({-group[i], s[i]});
    for (std::size_t i = 0; i + 2 < k; ++i) out.add_clause({-s[i], s[i + 1]});
    for (std::size_t i = 1; i < k; ++i) out.add_clause({-group[i], -s[i - 1]});
  }
  return out;
}

std::string to_dimacs(const Formula& f, int pairwise_limit) {
  Formula compiled = compile_at_most_one(f, pairwise_limit);
  std::ostringstream os;
  os << "p cnf " << compiled.num_vars << ' ' << compiled.clauses.size() << '\n';
  for (const auto& cl : compiled.clauses) {
    for (Lit l : cl) os << l << ' ';
    os << "0\n";
  }
  return os.str();
}

}  // namespace leakscan
