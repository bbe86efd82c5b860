#pragma once

#include <map>
#include <string>
#include <vector>

#include "leakscan/cfg.hpp"
#include "leakscan/solver.hpp"

namespace leakscan::detail {

/// CNF skeleton whose models are exactly the complete Entry->Return paths:
/// one selection variable per edge, at-most-one over each node's incoming
/// edges, reach defined as "some incoming edge selected" (Entry asserted),
/// a selected edge requires its source reached, every reached non-Return
/// node selects an outgoing edge, and Branch arms force their condition
/// literal with the arm's polarity.
struct FlowCnf {
  Formula f;
  std::vector<int> edge_var;      // per edge index
  std::vector<int> reach_var;     // per node
  std::map<int, int> branch_var;  // Branch node -> condition variable
};

/// When `share_conditions`, branches whose normalized core text matches use
/// one condition variable regardless of how the CFG itself allocated its
/// condition ids; otherwise every branch gets a private one.
inline FlowCnf encode_flow(const Cfg& cfg, bool share_conditions) {
  FlowCnf s;
  s.edge_var.resize(cfg.edges.size());
  for (auto& v : s.edge_var) v = s.f.new_var();
  s.reach_var.resize(cfg.nodes.size());
  for (auto& v : s.reach_var) v = s.f.new_var();
  s.f.add_unit(s.reach_var[0]);

  for (std::size_t v = 1; v < cfg.nodes.size(); ++v) {
    std::vector<Lit> in;
    for (int ei : cfg.pred[v]) in.push_back(s.edge_var[static_cast<std::size_t>(ei)]);
    s.f.add_at_most_one(in);
    std::vector<Lit> def = {-s.reach_var[v]};
    def.insert(def.end(), in.begin(), in.end());
    s.f.add_clause(def);
    for (Lit x : in) s.f.add_clause({-x, s.reach_var[v]});
  }
  for (std::size_t e = 0; e < cfg.edges.size(); ++e)
    s.f.add_clause({-s.edge_var[e], s.reach_var[static_cast<std::size_t>(cfg.edges[e].from)]});
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
    if (cfg.succ[v].empty()) continue;
    std::vector<Lit> out = {-s.reach_var[v]};
    for (int ei : cfg.succ[v]) out.push_back(s.edge_var[static_cast<std::size_t>(ei)]);
    s.f.add_clause(out);
  }
  std::map<std::string, int> by_core;
  for (const auto& [node, bc] : cfg.branch_conds) {
    int core = 0;
    if (share_conditions) {
      auto [it, fresh] = by_core.emplace(bc.core, 0);
      if (fresh) it->second = s.f.new_var();
      core = it->second;
    } else {
      core = s.f.new_var();
    }
    s.branch_var[node] = core;
    for (int ei : cfg.succ[static_cast<std::size_t>(node)]) {
      const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
      bool taken_true = e.polarity == EdgePolarity::True;
      bool core_value = taken_true != bc.negated;
      s.f.add_clause({-s.edge_var[static_cast<std::size_t>(ei)], core_value ? core : -core});
    }
  }
  return s;
}

inline int and_var(Formula& f, Lit a, Lit b) {
  int v = f.new_var();
  f.add_clause({-v, a});
  f.add_clause({-v, b});
  f.add_clause({-a, -b, v});
  return v;
}

inline int or_var(Formula& f, const std::vector<Lit>& terms) {
  int v = f.new_var();
  std::vector<Lit> any = {-v};
  for (Lit t : terms) {
    f.add_clause({-t, v});
    any.push_back(t);
  }
  f.add_clause(any);
  return v;
}

/// Walks the selected out-edges from Entry. A complete model selects exactly
/// one out-edge per reached node (branch arms exclude each other through the
/// condition literal), so the walk reconstructs the whole path.
inline Path decode_path(const Cfg& cfg, const std::vector<int>& edge_var,
                        const std::vector<bool>& model) {
  Path out;
  int cur = 0;
  out.nodes.push_back(cur);
  while (cfg.node(cur).kind != NodeKind::Return) {
    int next = -1;
    for (int ei : cfg.succ[static_cast<std::size_t>(cur)]) {
      if (!model[static_cast<std::size_t>(edge_var[static_cast<std::size_t>(ei)])]) continue;
      const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
      if (cfg.node(cur).kind == NodeKind::Branch)
        out.branch_literals.push_back({cur, e.polarity == EdgePolarity::True});
      next = e.to;
      break;
    }
    if (next < 0) break;  // cannot happen: reached non-returns select an out-edge
    out.nodes.push_back(next);
    cur = next;
  }
  return out;
}

}  // namespace leakscan::detail
