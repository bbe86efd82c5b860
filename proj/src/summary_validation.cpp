#include "leakscan/summary_validation.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <utility>

#include "flow_cnf.hpp"
#include "leakscan/lexer.hpp"

namespace leakscan {

namespace {

bool in_list(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

// Identifier-chain shape over normalized text: ident (('->' | '.') ident)*.
// `base` is the leading identifier; a plain identifier has rest == false.
struct ChainShape {
  bool is_ident = false;
  bool is_chain = false;  // length > 1
  std::string base;
};

ChainShape split_chain(const std::string& normalized) {
  ChainShape out;
  auto toks = tokenize(normalized).tokens;
  if (toks.empty() || toks[0].kind != TokKind::Identifier) return out;
  out.base = toks[0].text;
  bool want_link = true;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    if (want_link) {
      if (toks[i].kind != TokKind::Punct || (toks[i].text != "->" && toks[i].text != "."))
        return {};
    } else if (toks[i].kind != TokKind::Identifier) {
      return {};
    }
    want_link = !want_link;
  }
  if (!want_link) return {};  // dangling -> or .
  out.is_ident = toks.size() == 1;
  out.is_chain = toks.size() > 1;
  return out;
}

std::string role_name(MmRole r) {
  return r == MmRole::Allocator ? "Allocator" : "Deallocator";
}

std::string outcome_name(ValidationOutcome o) {
  switch (o) {
    case ValidationOutcome::Valid: return "Valid";
    case ValidationOutcome::Rejected: return "Rejected";
    case ValidationOutcome::Unknown: return "Unknown";
  }
  return "?";
}

// Branch literals along a path are consistent iff no shared condition
// variable is forced both ways. Core value on a taken edge is taken XOR
// negated (the condition text is true on the True edge; `negated` counts the
// peeled `!` prefixes).
bool path_literals_consistent(const Cfg& cfg, const Path& pi) {
  std::map<int, bool> forced;
  for (const auto& bc : pi.branch_literals) {
    auto it = cfg.branch_conds.find(bc.node);
    if (it == cfg.branch_conds.end()) continue;
    bool core = bc.taken != it->second.negated;
    auto [pos, fresh] = forced.emplace(it->second.var, core);
    if (!fresh && pos->second != core) return false;
  }
  return true;
}

}  // namespace

bool AliasSet::is_self(const std::string& expr) const {
  return self_aliases.count(normalize_expr(expr)) != 0;
}

bool AliasSet::is_field_derivation(const std::string& expr) const {
  std::string e = normalize_expr(expr);
  if (field_derivations.count(e)) return true;
  ChainShape c = split_chain(e);
  if (!c.is_chain) return false;
  return self_aliases.count(c.base) != 0 || field_derivations.count(c.base) != 0;
}

AliasSet compute_alias_set(const Cfg& cfg, int param_index) {
  AliasSet out;
  out.param_index = param_index;
  if (param_index < 0 || param_index >= static_cast<int>(cfg.params.size())) return out;
  out.self_aliases.insert(cfg.params[static_cast<std::size_t>(param_index)]);

  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& n : cfg.nodes) {
      if (n.kind != NodeKind::Assign) continue;
      ChainShape lhs = split_chain(normalize_expr(n.target));
      if (!lhs.is_ident) continue;  // a partial write rebinds nothing
      const std::string t = normalize_expr(n.target);
      const std::string v = normalize_expr(n.value);
      ChainShape rhs = split_chain(v);
      if (rhs.is_ident) {
        if (out.self_aliases.count(v) && !out.self_aliases.count(t)) {
          out.self_aliases.insert(t);
          grew = true;
        } else if (out.field_derivations.count(v) && !out.field_derivations.count(t)) {
          out.field_derivations.insert(t);
          grew = true;
        }
      } else if (rhs.is_chain) {
        bool reaches = out.self_aliases.count(rhs.base) || out.field_derivations.count(rhs.base) ||
                       out.field_derivations.count(v);
        if (reaches && (!out.field_derivations.count(v) || !out.field_derivations.count(t))) {
          out.field_derivations.insert(v);
          out.field_derivations.insert(t);
          grew = true;
        }
      }
    }
  }
  return out;
}

CallGraphView::CallGraphView(const Codebase& cb, int depth_limit)
    : cb_(&cb), depth_limit_(depth_limit) {}

const std::set<std::string>& CallGraphView::callees(const std::string& name) const {
  static const std::set<std::string> kEmpty;
  auto it = cb_->call_graph_edges.find(name);
  return it == cb_->call_graph_edges.end() ? kEmpty : it->second;
}

bool CallGraphView::reachable(const std::string& from, const std::string& to) const {
  if (from == to) return true;
  std::set<std::string> seen = {from};
  std::deque<std::pair<std::string, int>> work = {{from, 0}};
  while (!work.empty()) {
    auto [cur, depth] = work.front();
    work.pop_front();
    if (depth >= depth_limit_) continue;
    for (const auto& next : callees(cur)) {
      if (next == to) return true;
      if (seen.insert(next).second) work.emplace_back(next, depth + 1);
    }
  }
  return false;
}

// Per-node static facts for one summary check: normalized texts, which call
// sites free which argument expressions (wrapper chains resolved through the
// validator's memo), and which nodes start a fresh allocation.
struct SummaryValidator::PathCheck {
  struct Freed {
    std::string text;  // normalized freed expression
    std::string base;  // leading identifier when `text` is a longer chain
  };
  struct NodeFacts {
    std::string target;          // Assign/Alloc/Call result lvalue, normalized
    bool target_is_ident = false;
    std::string value;           // Assign rhs / Return expression, normalized
    std::string value_base;      // chain base of `value` when it is one
    std::vector<Freed> freed;    // expressions released at this node
    bool alloc_event = false;    // starts a fresh tracked allocation
  };
  std::vector<NodeFacts> node;
  int event_count = 0;
};

// All private traversal helpers live here so the public header stays small.
struct ValidatorImpl {
  using Facts = SummaryValidator::PathCheck;

  static Facts build_facts(SummaryValidator& sv, const Cfg& cfg, bool want_alloc_events,
                           int depth) {
    Facts out;
    out.node.resize(cfg.nodes.size());
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
      const CfgNode& n = cfg.nodes[i];
      auto& nf = out.node[i];
      switch (n.kind) {
        case NodeKind::Assign: {
          nf.target = normalize_expr(n.target);
          nf.target_is_ident = split_chain(nf.target).is_ident;
          nf.value = normalize_expr(n.value);
          ChainShape c = split_chain(nf.value);
          if (c.is_chain) nf.value_base = c.base;
          break;
        }
        case NodeKind::Alloc: {
          nf.target = normalize_expr(n.target);
          nf.target_is_ident = split_chain(nf.target).is_ident;
          if (want_alloc_events && nf.target.rfind("$drop", 0) != 0) {
            nf.alloc_event = true;
            ++out.event_count;
          }
          break;
        }
        case NodeKind::Free: {
          std::string v = normalize_expr(n.value);
          ChainShape c = split_chain(v);
          nf.freed.push_back({v, c.is_chain ? c.base : std::string()});
          break;
        }
        case NodeKind::Call: {
          nf.target = normalize_expr(n.target);
          nf.target_is_ident = split_chain(nf.target).is_ident;
          for (std::size_t k = 0; k < n.args.size(); ++k) {
            std::string a = normalize_expr(n.args[k]);
            ChainShape c = split_chain(a);
            if (!c.is_ident && !c.is_chain) continue;
            if (sv.callee_is_deallocator(n.callee, static_cast<int>(k), depth + 1))
              nf.freed.push_back({a, c.is_chain ? c.base : std::string()});
          }
          if (want_alloc_events && !nf.target.empty() &&
              sv.callee_is_allocator(n.callee, depth + 1)) {
            nf.alloc_event = true;
            ++out.event_count;
          }
          break;
        }
        case NodeKind::Return: {
          nf.value = normalize_expr(n.value);
          break;
        }
        default: break;
      }
    }
    return out;
  }

  // Binding machine for one allocation event: B starts at the event's target
  // and follows copies; a release of a bound name or emptying B kills the
  // event on this path; a Return of a bound name completes the witness.
  static bool allocator_path_witness(const Cfg& cfg, const Facts& facts, const Path& pi,
                                     std::size_t event_pos) {
    const auto& start = facts.node[static_cast<std::size_t>(pi.nodes[event_pos])];
    if (start.target.empty()) return false;
    std::set<std::string> bound = {start.target};
    for (std::size_t i = event_pos + 1; i < pi.nodes.size(); ++i) {
      int ni = pi.nodes[i];
      const auto& nf = facts.node[static_cast<std::size_t>(ni)];
      for (const auto& fr : nf.freed)
        if (bound.count(fr.text)) return false;  // released before return
      switch (cfg.node(ni).kind) {
        case NodeKind::Assign:
          if (nf.target_is_ident) {
            if (bound.count(nf.value)) bound.insert(nf.target);
            else bound.erase(nf.target);
          } else {
            bound.erase(nf.target);  // overwrite of the exact tracked lvalue
          }
          break;
        case NodeKind::Alloc:
        case NodeKind::Call:
          if (!nf.target.empty()) bound.erase(nf.target);
          break;
        case NodeKind::Return:
          return !nf.value.empty() && bound.count(nf.value) != 0;
        default: break;
      }
      if (bound.empty()) return false;
    }
    return false;
  }

  // Binding machine for a deallocator claim: `bound` are current self aliases
  // of the parameter, `derived` names bound to something reached through it.
  // A release of a bound name validates; a release of a derived name or a
  // chain off a bound/derived base validates only under allow_field_frees.
  static bool dealloc_path_witness(const Cfg& cfg, const Facts& facts, const Path& pi,
                                   const std::string& param, bool allow_field,
                                   bool* saw_field_free) {
    std::set<std::string> bound = {param};
    std::set<std::string> derived;
    for (int ni : pi.nodes) {
      const auto& nf = facts.node[static_cast<std::size_t>(ni)];
      for (const auto& fr : nf.freed) {
        if (bound.count(fr.text)) return true;
        bool field_hit = derived.count(fr.text) ||
                         (!fr.base.empty() && (bound.count(fr.base) || derived.count(fr.base)));
        if (field_hit) {
          if (allow_field) return true;
          if (saw_field_free) *saw_field_free = true;
        }
      }
      switch (cfg.node(ni).kind) {
        case NodeKind::Assign:
          if (nf.target_is_ident) {
            bool from_self = bound.count(nf.value) != 0;
            bool from_derived =
                derived.count(nf.value) != 0 ||
                (!nf.value_base.empty() &&
                 (bound.count(nf.value_base) || derived.count(nf.value_base)));
            bound.erase(nf.target);
            derived.erase(nf.target);
            if (from_self) bound.insert(nf.target);
            else if (from_derived) derived.insert(nf.target);
          } else {
            bound.erase(nf.target);
            derived.erase(nf.target);
          }
          break;
        case NodeKind::Alloc:
        case NodeKind::Call:
          if (!nf.target.empty()) {
            bound.erase(nf.target);
            derived.erase(nf.target);
          }
          break;
        default: break;
      }
    }
    return false;
  }

  // ---- solver route ---------------------------------------------------
  //
  // Exact encoding of the same machine. One selection variable per edge with
  // an at-most-one group over each node's incoming edges; a node is reached
  // iff an incoming edge is selected (Entry always); every reached non-Return
  // node selects an outgoing edge, so a model is one complete Entry->Return
  // path. Branch arms force their shared condition literal. Binding bits
  // per (alias, node) thread the machine state through the selected path.

  // alias name -> per-node binding variable. Transfer clauses define
  // bits[x][v] as "some selected in-edge carries the transformed predecessor
  // state"; 0 in a cell means constant false.
  struct BindingBits {
    std::map<std::string, std::vector<int>> bits;

    Lit at(const std::string& x, int node) const {
      auto it = bits.find(x);
      if (it == bits.end()) return 0;
      return it->second[static_cast<std::size_t>(node)];
    }
  };

  // The per-edge transformed state of alias `x` entering node v from u:
  // returns 0 for constant false, else a literal over predecessor bits.
  // `self` is the binding table being defined; `feeder` supplies the rhs
  // lookup (same table for self aliases; the self table when a derived bit is
  // fed by a chain off a bound base).
  static Lit transfer_lit(const Cfg& cfg, const Facts& facts, const BindingBits& self,
                          const std::string& x, int u, int v) {
    const auto& nf = facts.node[static_cast<std::size_t>(v)];
    switch (cfg.node(v).kind) {
      case NodeKind::Assign:
        if (nf.target == x) return nf.target_is_ident ? self.at(nf.value, u) : 0;
        return self.at(x, u);
      case NodeKind::Alloc:
      case NodeKind::Call:
        if (!nf.target.empty() && nf.target == x) return 0;
        return self.at(x, u);
      default:
        return self.at(x, u);
    }
  }

  struct Instance {
    detail::FlowCnf s;
    BindingBits bound;
  };

  // Shared binding layer: `universe` gets one bit per node, seeded at
  // `seed_node` (bits before it are forced false, the seed bit follows
  // reachability there). When seed_node is 0 the seed is unconditional.
  static Instance encode_bindings(const Cfg& cfg, const Facts& facts,
                                  const std::set<std::string>& universe,
                                  const std::string& seed_name, int seed_node,
                                  bool share_conditions) {
    Instance inst;
    inst.s = detail::encode_flow(cfg, share_conditions);
    Formula& f = inst.s.f;
    for (const auto& x : universe) {
      auto& col = inst.bound.bits[x];
      col.assign(cfg.nodes.size(), 0);
      for (std::size_t v = 0; v < cfg.nodes.size(); ++v) col[v] = f.new_var();
    }
    for (const auto& x : universe) {
      for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
        Lit hv = inst.bound.bits[x][v];
        if (static_cast<int>(v) == seed_node) {
          if (x == seed_name) {
            if (seed_node == 0) {
              f.add_unit(hv);
            } else {
              f.add_clause({-hv, inst.s.reach_var[v]});
              f.add_clause({-inst.s.reach_var[v], hv});
            }
          } else {
            f.add_unit(-hv);
          }
          continue;
        }
        if (v == 0) {
          f.add_unit(-hv);
          continue;
        }
        std::vector<Lit> terms;
        for (int ei : cfg.pred[v]) {
          const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
          Lit eff = transfer_lit(cfg, facts, inst.bound, x, e.from, static_cast<int>(v));
          if (eff == 0) continue;
          terms.push_back(detail::and_var(f, inst.s.edge_var[static_cast<std::size_t>(ei)], eff));
        }
        if (terms.empty()) {
          f.add_unit(-hv);
        } else {
          for (Lit t : terms) f.add_clause({-t, hv});
          std::vector<Lit> any = {-hv};
          any.insert(any.end(), terms.begin(), terms.end());
          f.add_clause(any);
        }
      }
    }
    return inst;
  }

  // Solver-route allocator check for one event node. Freed bits make a
  // release of any bound alias permanent; the query asks for a Return of a
  // still-bound, never-freed value.
  static SatStatus solve_allocator_event(SummaryValidator& sv, const Cfg& cfg,
                                         const Facts& facts, int event, Path* witness) {
    const auto& enf = facts.node[static_cast<std::size_t>(event)];
    std::set<std::string> universe = self_alias_closure(cfg, enf.target);
    Instance inst = encode_bindings(cfg, facts, universe, enf.target, event,
                                    sv.opts_.share_conditions);
    Formula& f = inst.s.f;

    std::vector<int> freed(cfg.nodes.size(), 0);
    for (std::size_t v = 0; v < cfg.nodes.size(); ++v) freed[v] = f.new_var();
    for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
      if (static_cast<int>(v) == event || v == 0) {
        f.add_unit(-freed[v]);
        continue;
      }
      const auto& nf = facts.node[v];
      std::vector<Lit> terms;
      for (int ei : cfg.pred[v]) {
        const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
        std::vector<Lit> sources = {freed[static_cast<std::size_t>(e.from)]};
        for (const auto& fr : nf.freed) {
          Lit h = inst.bound.at(fr.text, e.from);
          if (h != 0) sources.push_back(h);
        }
        Lit carried = sources.size() == 1 ? sources[0] : detail::or_var(f, sources);
        terms.push_back(detail::and_var(f, inst.s.edge_var[static_cast<std::size_t>(ei)], carried));
      }
      if (terms.empty()) {
        f.add_unit(-freed[v]);
      } else {
        for (Lit t : terms) f.add_clause({-t, freed[v]});
        std::vector<Lit> any = {-freed[v]};
        any.insert(any.end(), terms.begin(), terms.end());
        f.add_clause(any);
      }
    }

    std::vector<Lit> queries;
    for (int r : cfg.return_nodes()) {
      const auto& nf = facts.node[static_cast<std::size_t>(r)];
      Lit h = inst.bound.at(nf.value, r);
      if (nf.value.empty() || h == 0) continue;
      int q = f.new_var();
      f.add_clause({-q, inst.s.reach_var[static_cast<std::size_t>(r)]});
      f.add_clause({-q, h});
      f.add_clause({-q, -freed[static_cast<std::size_t>(r)]});
      queries.push_back(q);
    }
    if (queries.empty()) return SatStatus::Unsat;
    f.add_clause(queries);

    SatResult res = solve(f, {sv.opts_.solver_budget});
    if (res.sat() && witness) *witness = detail::decode_path(cfg, inst.s.edge_var, res.model);
    return res.status;
  }

  static SatStatus solve_deallocator(SummaryValidator& sv, const Cfg& cfg, const Facts& facts,
                                     const std::string& param, Path* witness) {
    std::set<std::string> universe = self_alias_closure(cfg, param);
    Instance inst = encode_bindings(cfg, facts, universe, param, 0,
                                    sv.opts_.share_conditions);
    Formula& f = inst.s.f;

    // Names that can end up bound to memory reached through the parameter;
    // only consulted when field frees may validate.
    BindingBits derived;
    if (sv.opts_.allow_field_frees) {
      std::set<std::string> field_names;
      bool grew = true;
      while (grew) {
        grew = false;
        for (const auto& nf : facts.node) {
          if (!nf.target_is_ident || nf.value.empty()) continue;
          bool feeds = (!nf.value_base.empty() &&
                        (universe.count(nf.value_base) || field_names.count(nf.value_base))) ||
                       field_names.count(nf.value);
          if (feeds && field_names.insert(nf.target).second) grew = true;
        }
      }
      for (const auto& x : field_names) {
        auto& col = derived.bits[x];
        col.assign(cfg.nodes.size(), 0);
        for (std::size_t v = 0; v < cfg.nodes.size(); ++v) col[v] = f.new_var();
      }
      for (const auto& [x, col] : derived.bits) {
        for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
          if (v == 0) {
            f.add_unit(-col[v]);
            continue;
          }
          const auto& nf = facts.node[v];
          std::vector<Lit> terms;
          for (int ei : cfg.pred[v]) {
            const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
            Lit eff = 0;
            NodeKind vk = cfg.node(static_cast<int>(v)).kind;
            bool writes_x = (vk == NodeKind::Assign || vk == NodeKind::Alloc ||
                             vk == NodeKind::Call) &&
                            !nf.target.empty() && nf.target == x;
            if (writes_x && vk == NodeKind::Assign && nf.target_is_ident) {
              std::vector<Lit> feed;
              if (Lit g = derived.at(nf.value, e.from); g != 0) feed.push_back(g);
              if (!nf.value_base.empty()) {
                if (Lit h = inst.bound.at(nf.value_base, e.from); h != 0) feed.push_back(h);
                if (Lit g = derived.at(nf.value_base, e.from); g != 0) feed.push_back(g);
              }
              if (!feed.empty()) eff = feed.size() == 1 ? feed[0] : detail::or_var(f, feed);
            } else if (writes_x) {
              eff = 0;
            } else {
              eff = derived.at(x, e.from);
            }
            if (eff == 0) continue;
            terms.push_back(detail::and_var(f, inst.s.edge_var[static_cast<std::size_t>(ei)], eff));
          }
          if (terms.empty()) {
            f.add_unit(-col[v]);
          } else {
            for (Lit t : terms) f.add_clause({-t, col[v]});
            std::vector<Lit> any = {-col[v]};
            any.insert(any.end(), terms.begin(), terms.end());
            f.add_clause(any);
          }
        }
      }
    }

    std::vector<Lit> site_hits;
    for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
      const auto& nf = facts.node[v];
      if (nf.freed.empty() || v == 0) continue;
      for (int ei : cfg.pred[v]) {
        const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
        std::vector<Lit> ways;
        for (const auto& fr : nf.freed) {
          if (Lit h = inst.bound.at(fr.text, e.from); h != 0) ways.push_back(h);
          if (sv.opts_.allow_field_frees) {
            if (Lit g = derived.at(fr.text, e.from); g != 0) ways.push_back(g);
            if (!fr.base.empty()) {
              if (Lit h = inst.bound.at(fr.base, e.from); h != 0) ways.push_back(h);
              if (Lit g = derived.at(fr.base, e.from); g != 0) ways.push_back(g);
            }
          }
        }
        if (ways.empty()) continue;
        Lit any = ways.size() == 1 ? ways[0] : detail::or_var(f, ways);
        site_hits.push_back(detail::and_var(f, inst.s.edge_var[static_cast<std::size_t>(ei)], any));
      }
    }
    if (site_hits.empty()) return SatStatus::Unsat;
    f.add_clause(site_hits);

    SatResult res = solve(f, {sv.opts_.solver_budget});
    if (res.sat() && witness) *witness = detail::decode_path(cfg, inst.s.edge_var, res.model);
    return res.status;
  }
};

SummaryValidator::SummaryValidator(const Codebase& cb, ValidationOptions opts)
    : cb_(&cb), opts_(std::move(opts)), calls_(cb, opts_.call_depth) {}

const Cfg* SummaryValidator::cfg_for(const std::string& name) {
  auto it = cfg_cache_.find(name);
  if (it != cfg_cache_.end()) return &it->second;
  if (cfg_failed_.count(name)) return nullptr;
  const FunctionRecord* rec = cb_->find(name);
  if (!rec) {
    cfg_failed_.insert(name);
    return nullptr;
  }
  CfgBuildOptions bo;
  bo.alloc_primitives = opts_.alloc_primitives;
  bo.free_primitives = opts_.free_primitives;
  bo.sink_calls = opts_.sink_calls;
  bo.share_conditions = opts_.share_conditions;
  try {
    // Transitive allocators and deallocators are resolved at call sites
    // during interpretation, so the cached CFG never depends on what has
    // been validated so far.
    auto [pos, inserted] = cfg_cache_.emplace(name, build_cfg(*rec, HintsFile{}, bo));
    (void)inserted;
    return &pos->second;
  } catch (const CfgError&) {
    cfg_failed_.insert(name);
    return nullptr;
  }
}

bool SummaryValidator::callee_is_allocator(const std::string& name, int depth) {
  if (in_list(opts_.alloc_primitives, name)) return true;
  auto mit = allocator_memo_.find(name);
  if (mit != allocator_memo_.end()) return mit->second;
  if (depth > opts_.call_depth) return false;
  if (alloc_in_progress_.count(name)) return false;
  const Cfg* cfg = cfg_for(name);
  if (!cfg) return false;
  alloc_in_progress_.insert(name);
  FunctionSummary probe =
      FunctionSummary::make(name, MmRole::Allocator, OwnershipTarget::ret(), Provenance::Manual);
  ValidationVerdict v = check_summary(probe, *cfg, depth);
  alloc_in_progress_.erase(name);
  if (v.outcome == ValidationOutcome::Valid) {
    allocator_memo_[name] = true;
    return true;
  }
  return false;  // negatives are not memoized: they may be cycle artifacts
}

bool SummaryValidator::callee_is_deallocator(const std::string& name, int arg, int depth) {
  if (in_list(opts_.free_primitives, name)) return arg == 0;
  auto key = std::make_pair(name, arg);
  auto mit = deallocator_memo_.find(key);
  if (mit != deallocator_memo_.end()) return mit->second;
  if (depth > opts_.call_depth) return false;
  if (dealloc_in_progress_.count(key)) return false;
  const Cfg* cfg = cfg_for(name);
  if (!cfg) return false;
  dealloc_in_progress_.insert(key);
  FunctionSummary probe = FunctionSummary::make(name, MmRole::Deallocator,
                                                OwnershipTarget::arg(arg), Provenance::Manual);
  ValidationVerdict v = check_summary(probe, *cfg, depth);
  dealloc_in_progress_.erase(key);
  if (v.outcome == ValidationOutcome::Valid) {
    deallocator_memo_[key] = true;
    return true;
  }
  return false;
}

ValidationVerdict SummaryValidator::check_summary(const FunctionSummary& s, const Cfg& cfg,
                                                  int depth) {
  ValidationVerdict out;
  out.summary = s;

  std::string param;
  if (s.role == MmRole::Deallocator) {
    int idx = s.target.arg_index;
    const FunctionRecord* rec = cb_->find(cfg.function);
    if (rec) {
      if (idx >= 0 && idx < static_cast<int>(rec->params.size())) {
        const std::string& nm = rec->params[static_cast<std::size_t>(idx)].name;
        if (!nm.empty() && nm != "...") param = nm;
      }
    } else if (idx >= 0 && idx < static_cast<int>(cfg.params.size())) {
      param = cfg.params[static_cast<std::size_t>(idx)];
    }
    if (param.empty()) {
      out.outcome = ValidationOutcome::Rejected;
      out.reason = "argument " + std::to_string(idx) + " is not a named parameter";
      return out;
    }
  }

  PathCheck facts =
      ValidatorImpl::build_facts(*this, cfg, s.role == MmRole::Allocator, depth);
  if (s.role == MmRole::Allocator && facts.event_count == 0) {
    out.outcome = ValidationOutcome::Rejected;
    out.reason = "no allocation event on any path";
    return out;
  }

  PathEnumeration en = enumerate_paths(cfg, opts_.path_cap);
  if (!en.cap_exceeded) {
    bool saw_field_free = false;
    for (const Path& pi : en.paths) {
      if (!path_literals_consistent(cfg, pi)) continue;
      if (s.role == MmRole::Allocator) {
        for (std::size_t pos = 0; pos < pi.nodes.size(); ++pos) {
          if (!facts.node[static_cast<std::size_t>(pi.nodes[pos])].alloc_event) continue;
          if (ValidatorImpl::allocator_path_witness(cfg, facts, pi, pos)) {
            out.outcome = ValidationOutcome::Valid;
            out.witness = pi;
            return out;
          }
        }
      } else if (ValidatorImpl::dealloc_path_witness(cfg, facts, pi, param,
                                                     opts_.allow_field_frees, &saw_field_free)) {
        out.outcome = ValidationOutcome::Valid;
        out.witness = pi;
        return out;
      }
    }
    out.outcome = ValidationOutcome::Rejected;
    if (s.role == MmRole::Allocator) {
      out.reason = "no feasible path returns the allocated value";
    } else if (saw_field_free) {
      out.reason = "only a field derivation of the argument is freed";
    } else {
      out.reason = "no feasible path frees the argument";
    }
    return out;
  }

  // Past the path cap: exact solver encoding of the same machine.
  bool budget_miss = false;
  if (s.role == MmRole::Allocator) {
    for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
      if (!facts.node[v].alloc_event) continue;
      Path witness;
      SatStatus st = ValidatorImpl::solve_allocator_event(*this, cfg, facts,
                                                          static_cast<int>(v), &witness);
      if (st == SatStatus::Sat) {
        out.outcome = ValidationOutcome::Valid;
        out.witness = witness;
        return out;
      }
      if (st == SatStatus::Unknown) budget_miss = true;
    }
    if (budget_miss) {
      out.outcome = ValidationOutcome::Unknown;
      out.reason = "solver budget exhausted";
    } else {
      out.outcome = ValidationOutcome::Rejected;
      out.reason = "no feasible path returns the allocated value";
    }
    return out;
  }

  Path witness;
  SatStatus st = ValidatorImpl::solve_deallocator(*this, cfg, facts, param, &witness);
  if (st == SatStatus::Sat) {
    out.outcome = ValidationOutcome::Valid;
    out.witness = witness;
  } else if (st == SatStatus::Unknown) {
    out.outcome = ValidationOutcome::Unknown;
    out.reason = "solver budget exhausted";
  } else {
    out.outcome = ValidationOutcome::Rejected;
    out.reason = "no feasible path frees the argument";
  }
  return out;
}

ValidationVerdict SummaryValidator::validate(const FunctionSummary& s) {
  const Cfg* cfg = cfg_for(s.name);
  if (!cfg) {
    ValidationVerdict out;
    out.summary = s;
    out.outcome = ValidationOutcome::Unknown;
    out.reason = "control flow not analyzable";
    return out;
  }
  return s.role == MmRole::Allocator ? validate_allocator(s, *cfg, calls_)
                                     : validate_deallocator(s, *cfg, calls_);
}

ValidationVerdict SummaryValidator::validate_allocator(const FunctionSummary& s, const Cfg& cfg,
                                                       CallGraphView& calls) {
  (void)calls;
  if (s.role != MmRole::Allocator)
    throw std::invalid_argument("validate_allocator needs an allocator summary");
  return check_summary(s, cfg, 0);
}

ValidationVerdict SummaryValidator::validate_deallocator(const FunctionSummary& s, const Cfg& cfg,
                                                         CallGraphView& calls) {
  (void)calls;
  if (s.role != MmRole::Deallocator)
    throw std::invalid_argument("validate_deallocator needs a deallocator summary");
  return check_summary(s, cfg, 0);
}

SummaryValidator::Report SummaryValidator::validate_all(
    const std::vector<FunctionSummary>& candidates) {
  Report report;
  report.verdicts.resize(candidates.size());

  std::vector<std::size_t> dealloc_idx, alloc_idx;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    (candidates[i].role == MmRole::Deallocator ? dealloc_idx : alloc_idx).push_back(i);

  std::set<std::size_t> valid;
  auto run_group = [&](const std::vector<std::size_t>& group) {
    bool grew_any = false;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i : group) {
        if (valid.count(i)) continue;
        ValidationVerdict v = validate(candidates[i]);
        report.verdicts[i] = v;
        if (v.outcome != ValidationOutcome::Valid) continue;
        const FunctionSummary& s = candidates[i];
        if (s.role == MmRole::Deallocator)
          deallocator_memo_[{s.name, s.target.arg_index}] = true;
        else
          allocator_memo_[s.name] = true;
        valid.insert(i);
        grew = grew_any = true;
      }
    }
    return grew_any;
  };

  // Deallocator knowledge feeds allocator kill sites but not the other way
  // round, so deallocators stabilize first; the outer loop is the confirming
  // extra round.
  bool changed = true;
  while (changed) {
    bool d = run_group(dealloc_idx);
    bool a = run_group(alloc_idx);
    changed = d || a;
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ValidationVerdict& v = report.verdicts[i];
    if (v.outcome == ValidationOutcome::Valid) {
      v.summary.validated = true;
      report.validated.merge(v.summary);
    } else if (v.outcome == ValidationOutcome::Unknown) {
      // Budget misses stay conservative: the summary is kept, unmarked.
      report.validated.merge(v.summary);
    }
  }
  return report;
}

std::string rejection_table(const std::vector<ValidationVerdict>& verdicts) {
  std::string out = "name|role|target|outcome|reason\n";
  for (const auto& v : verdicts) {
    out += v.summary.name + "|" + role_name(v.summary.role) + "|" + v.summary.target.to_string() +
           "|" + outcome_name(v.outcome) + "|" + v.reason + "\n";
  }
  return out;
}

}  // namespace leakscan
