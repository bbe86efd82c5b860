#pragma once

// Seeded random generators for property tests. Every suite passes an explicit
// seed so failures replay.

#include <random>
#include <string>
#include <vector>

#include "leakscan/solver.hpp"

namespace leakscan::testsupport {

inline Formula random_formula(std::mt19937& rng, int max_vars = 16) {
  std::uniform_int_distribution<int> nvars(1, max_vars);
  Formula f;
  f.num_vars = nvars(rng);
  std::uniform_int_distribution<int> nclauses(0, 30);
  std::uniform_int_distribution<int> width(1, 4);
  std::uniform_int_distribution<int> var(1, f.num_vars);
  std::bernoulli_distribution sign(0.5);
  const int m = nclauses(rng);
  for (int i = 0; i < m; ++i) {
    std::vector<Lit> cl;
    const int w = width(rng);
    for (int j = 0; j < w; ++j) cl.push_back(sign(rng) ? var(rng) : -var(rng));
    f.add_clause(std::move(cl));
  }
  std::uniform_int_distribution<int> ngroups(0, 3);
  const int g = ngroups(rng);
  for (int i = 0; i < g; ++i) {
    std::uniform_int_distribution<int> gsize(2, std::min(8, f.num_vars + 2));
    std::vector<Lit> group;
    const int k = gsize(rng);
    for (int j = 0; j < k; ++j) group.push_back(sign(rng) ? var(rng) : -var(rng));
    f.add_at_most_one(std::move(group));
  }
  return f;
}

// Random structured C function body: nested if/else over a small condition
// pool with allocations, frees, escapes, and returns sprinkled in. Used to
// exercise CFG construction and the feasibility/validation oracles; the
// shapes stay small (caller bounds node counts after building).
struct BodyGenConfig {
  int max_depth = 3;
  int max_stmts = 4;
  int condition_pool = 6;
  // Emit a pointer-returning signature whose return statements carry p/q/0,
  // so allocator claims over the generated body are non-trivial.
  bool value_returns = false;
};

class BodyGen {
 public:
  BodyGen(std::mt19937& rng, BodyGenConfig cfg = {}) : rng_(rng), cfg_(cfg) {}

  // Function over (T *q, int m) with local pointer p.
  std::string function(const std::string& name) {
    std::string body = "  char *p = 0;\n" + block(0);
    if (cfg_.value_returns)
      return "char *" + name + "(char *q, int m) {\n" + body + "  return p;\n}\n";
    return "void " + name + "(char *q, int m) {\n" + body + "}\n";
  }

 private:
  std::string cond() {
    std::uniform_int_distribution<int> pick(1, cfg_.condition_pool);
    int c = pick(rng_);
    std::bernoulli_distribution neg(0.3);
    std::string text = "c" + std::to_string(c);
    return neg(rng_) ? "!" + text : text;
  }

  std::string stmt(int depth) {
    std::uniform_int_distribution<int> pick(0, depth >= cfg_.max_depth ? 5 : 6);
    switch (pick(rng_)) {
      case 0: return "  p = malloc(8);\n";
      case 1: return "  free(p);\n";
      case 2: return "  use(p);\n";
      case 3: return "  q = p;\n";
      case 4: {
        if (!cfg_.value_returns) return "  return;\n";
        std::uniform_int_distribution<int> val(0, 2);
        switch (val(rng_)) {
          case 0: return "  return p;\n";
          case 1: return "  return q;\n";
          default: return "  return 0;\n";
        }
      }
      case 5: return "  p = q;\n";
      default:
        return "  if (" + cond() + ") {\n" + block(depth + 1) + "  }" +
               (flip() ? " else {\n" + block(depth + 1) + "  }\n" : "\n");
    }
  }

  std::string block(int depth) {
    std::uniform_int_distribution<int> count(1, cfg_.max_stmts);
    std::string out;
    const int k = count(rng_);
    for (int i = 0; i < k; ++i) out += stmt(depth);
    return out;
  }

  bool flip() {
    std::bernoulli_distribution b(0.5);
    return b(rng_);
  }

  std::mt19937& rng_;
  BodyGenConfig cfg_;
};

}  // namespace leakscan::testsupport
