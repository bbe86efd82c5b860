#include "leakscan/feasibility.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <tuple>

#include "flow_cnf.hpp"

namespace leakscan {

namespace {

enum class Effect { None, SetAlloc, SetFreed, SetEscaped };

// Node effects on the tracked allocation's (alloc, freed, escaped) triple.
// All three are monotone: each records "happened at or before this node", so
// setters only ever turn their bit on. Sites unrelated to the tracked value
// classify as None and leave the triple alone.
struct SiteFacts {
  std::set<std::string> aliases;
  std::vector<Effect> effect;
};

// Sink-call escapes carry the escaping expressions as call arguments; the
// other escape modes put the single expression in `value`.
bool escape_hits(const CfgNode& n, const std::set<std::string>& aliases) {
  if (!n.value.empty() && aliases.count(normalize_expr(n.value))) return true;
  for (const auto& a : n.args)
    if (aliases.count(normalize_expr(a))) return true;
  return false;
}

SiteFacts site_facts(const Cfg& cfg, int site) {
  SiteFacts sf;
  sf.aliases = self_alias_closure(cfg, cfg.node(site).target);
  sf.effect.assign(cfg.nodes.size(), Effect::None);
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
    const CfgNode& n = cfg.nodes[v];
    if (static_cast<int>(v) == site) {
      sf.effect[v] = Effect::SetAlloc;
    } else if (n.kind == NodeKind::Free && sf.aliases.count(normalize_expr(n.value))) {
      sf.effect[v] = Effect::SetFreed;
    } else if (n.kind == NodeKind::Escape && escape_hits(n, sf.aliases)) {
      sf.effect[v] = Effect::SetEscaped;
    }
  }
  return sf;
}

// True when `core` (a normalized condition with `!` already peeled) is a
// null test of one of the aliases. Returns the core value that means
// "pointer is non-null": +1 for `p` / `p != 0`, -1 for `p == 0`, 0 when the
// condition is not a recognizable null test.
int non_null_core_value(const std::string& core, const std::set<std::string>& aliases) {
  if (aliases.count(core)) return +1;
  auto is_null_const = [](const std::string& s) {
    return s == "0" || s == "NULL" || s == "nullptr";
  };
  for (const char* op : {"==", "!="}) {
    std::size_t pos = core.find(op);
    if (pos == std::string::npos) continue;
    std::string lhs = core.substr(0, pos);
    std::string rhs = core.substr(pos + 2);
    bool hit = (aliases.count(lhs) && is_null_const(rhs)) ||
               (aliases.count(rhs) && is_null_const(lhs));
    if (!hit) continue;
    return op[0] == '=' ? -1 : +1;
  }
  return 0;
}

std::set<int> forward_nodes(const Cfg& cfg, int from) {
  std::set<int> seen = {from};
  std::deque<int> work = {from};
  while (!work.empty()) {
    int cur = work.front();
    work.pop_front();
    for (int ei : cfg.succ[static_cast<std::size_t>(cur)]) {
      int to = cfg.edges[static_cast<std::size_t>(ei)].to;
      if (seen.insert(to).second) work.push_back(to);
    }
  }
  return seen;
}

// Defines bit[v] as "inherited over the selected incoming edge" via Tseitin;
// setter nodes and the entry get units instead.
std::vector<int> encode_state_bit(const Cfg& cfg, detail::FlowCnf& s,
                                  const SiteFacts& sf, Effect setter) {
  Formula& f = s.f;
  std::vector<int> bit(cfg.nodes.size(), 0);
  for (auto& v : bit) v = f.new_var();
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
    if (sf.effect[v] == setter) {
      f.add_unit(bit[v]);
      continue;
    }
    if (v == 0) {
      f.add_unit(-bit[v]);
      continue;
    }
    std::vector<Lit> terms;
    for (int ei : cfg.pred[v]) {
      const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
      terms.push_back(detail::and_var(f, s.edge_var[static_cast<std::size_t>(ei)],
                                      bit[static_cast<std::size_t>(e.from)]));
    }
    for (Lit t : terms) f.add_clause({-t, bit[v]});
    std::vector<Lit> any = {-bit[v]};
    any.insert(any.end(), terms.begin(), terms.end());
    f.add_clause(any);
  }
  return bit;
}

std::string describe_node(const Cfg& cfg, const CfgNode& n, int index, const Path& w) {
  switch (n.kind) {
    case NodeKind::Entry:
      return "entry";
    case NodeKind::Alloc:
      return "allocate " + n.target + " via " + n.callee;
    case NodeKind::Free:
      return "release " + n.value;
    case NodeKind::Branch: {
      for (const auto& bc : w.branch_literals)
        if (bc.node == index)
          return "branch on " + n.value + (bc.taken ? " (taken)" : " (not taken)");
      return "branch on " + n.value;
    }
    case NodeKind::Assign:
      return n.target + " = " + n.value;
    case NodeKind::Call:
      return n.target.empty() ? n.callee + "(...)" : n.target + " = " + n.callee + "(...)";
    case NodeKind::Escape:
      return "escapes: " + n.value;
    case NodeKind::Return:
      return n.value.empty() ? "return" : "return " + n.value;
    case NodeKind::Deref:
      return "dereference " + n.value;
    default:
      return "statement";
  }
  (void)cfg;
}

std::string tracked_display(const CfgNode& site) {
  if (site.target.rfind("$drop", 0) == 0) return "the unassigned " + site.callee + " result";
  return "'" + site.target + "'";
}

void append_tag(Warning& w, const std::string& tag) {
  if (!w.tags.empty()) w.tags += ",";
  w.tags += tag;
}

}  // namespace

LeakEncoding encode_leak_feasibility(const Cfg& cfg, int allocation_site,
                                     const LeakOptions& opts) {
  if (allocation_site < 0 || allocation_site >= static_cast<int>(cfg.nodes.size()) ||
      cfg.node(allocation_site).kind != NodeKind::Alloc)
    throw std::invalid_argument("node " + std::to_string(allocation_site) +
                                " is not an allocation site");

  SiteFacts sf = site_facts(cfg, allocation_site);
  detail::FlowCnf s = detail::encode_flow(cfg, opts.share_conditions);

  std::vector<int> alloc_bit = encode_state_bit(cfg, s, sf, Effect::SetAlloc);
  std::vector<int> freed_bit = encode_state_bit(cfg, s, sf, Effect::SetFreed);
  std::vector<int> escaped_bit = encode_state_bit(cfg, s, sf, Effect::SetEscaped);

  LeakEncoding enc;
  enc.site = allocation_site;
  enc.tracked = cfg.node(allocation_site).target;
  enc.aliases = sf.aliases;
  enc.edge_vars = s.edge_var;
  enc.reach_vars = s.reach_var;
  enc.branch_literal_vars = s.branch_var;
  enc.state_vars.resize(cfg.nodes.size());
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v)
    enc.state_vars[v] = {alloc_bit[v], freed_bit[v], escaped_bit[v]};

  if (opts.success_guards) {
    // A leak needs the allocation to have succeeded, so null tests of the
    // tracked pointer that sit after the site pin to the non-null polarity.
    // A shared condition variable is pinned only when every branch carrying
    // it lies forward of the site; one reached earlier (a lazy-init test of
    // the old value) would make the pin contradict the path to the site.
    std::set<int> forward = forward_nodes(cfg, allocation_site);
    std::map<int, std::vector<int>> carriers;  // condition var -> branch nodes
    for (const auto& [node, var] : s.branch_var) carriers[var].push_back(node);
    std::set<Lit> pins;
    for (const auto& [var, nodes] : carriers) {
      bool all_forward = true;
      for (int b : nodes) all_forward &= forward.count(b) > 0;
      if (!all_forward) continue;
      int polarity = non_null_core_value(cfg.branch_conds.at(nodes.front()).core, sf.aliases);
      if (polarity == 0) continue;
      pins.insert(polarity > 0 ? var : -var);
    }
    for (Lit p : pins) {
      s.f.add_unit(p);
      enc.guard_units.push_back(p);
    }
  }

  enc.formula = std::move(s.f);
  return enc;
}

FeasibilityVerdict check_leak_feasible(const Cfg& cfg, int allocation_site,
                                       const LeakOptions& opts) {
  LeakEncoding enc = encode_leak_feasibility(cfg, allocation_site, opts);
  FeasibilityVerdict out;
  bool any_unknown = false;
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
    if (cfg.nodes[v].kind != NodeKind::Return) continue;
    Formula f = enc.formula;
    f.add_unit(enc.reach_vars[v]);
    f.add_unit(enc.state_vars[v].alloc);
    f.add_unit(-enc.state_vars[v].freed);
    f.add_unit(-enc.state_vars[v].escaped);
    SatResult res = solve(f, {opts.solver_budget});
    if (res.status == SatStatus::Unknown) {
      any_unknown = true;
      continue;
    }
    if (res.sat()) {
      out.status = Feasibility::Feasible;
      out.witness = detail::decode_path(cfg, enc.edge_vars, res.model);
      out.leak_return = static_cast<int>(v);
      return out;
    }
  }
  if (any_unknown) {
    out.status = Feasibility::Unknown;
    out.reason = "solver budget exhausted";
  } else {
    out.status = Feasibility::Infeasible;
  }
  return out;
}

StateTriple replay_path(const Cfg& cfg, const Path& path, int allocation_site) {
  StateTriple t;
  std::set<std::string> aliases;
  if (allocation_site >= 0 && allocation_site < static_cast<int>(cfg.nodes.size()) &&
      cfg.node(allocation_site).kind == NodeKind::Alloc)
    aliases = self_alias_closure(cfg, cfg.node(allocation_site).target);
  for (int idx : path.nodes) {
    const CfgNode& n = cfg.node(idx);
    if (idx == allocation_site) {
      t.alloc = true;
    } else if (n.kind == NodeKind::Free && aliases.count(normalize_expr(n.value))) {
      t.freed = true;
    } else if (n.kind == NodeKind::Escape && escape_hits(n, aliases)) {
      t.escaped = true;
    }
  }
  return t;
}

std::vector<Warning> scan_function(const FunctionRecord& rec, const HintsFile& hints,
                                   const CfgBuildOptions& build_opts, const LeakOptions& opts,
                                   std::vector<std::string>* diagnostics) {
  Cfg cfg;
  try {
    cfg = build_cfg(rec, hints, build_opts);
  } catch (const CfgError& e) {
    if (diagnostics) diagnostics->push_back(rec.name + ": " + e.what());
    return {};
  }

  int last_return_line = 0;
  for (int r : cfg.return_nodes())
    last_return_line = std::max(last_return_line, cfg.node(r).span.start_line);

  std::vector<Warning> out;
  std::set<std::tuple<std::string, std::string, int, int>> seen;
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v) {
    if (cfg.nodes[v].kind != NodeKind::Alloc) continue;
    FeasibilityVerdict verdict = check_leak_feasible(cfg, static_cast<int>(v), opts);
    if (verdict.status != Feasibility::Feasible) continue;

    int alloc_line = cfg.nodes[v].span.start_line;
    int leak_line = cfg.node(verdict.leak_return).span.start_line;
    if (!seen.insert({cfg.file, cfg.function, alloc_line, leak_line}).second) continue;

    bool via_goto = false;
    for (std::size_t i = 0; i + 1 < verdict.witness.nodes.size(); ++i) {
      for (int ei : cfg.succ[static_cast<std::size_t>(verdict.witness.nodes[i])]) {
        const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
        if (e.to == verdict.witness.nodes[i + 1] && e.from_goto) via_goto = true;
      }
    }
    bool early = leak_line < last_return_line;

    Warning w;
    w.source = WarningSource::Internal;
    w.file = cfg.file;
    w.function = cfg.function;
    w.line = alloc_line;
    w.status = WarningStatus::FeasibilityRetained;
    w.allocation_site = cfg.nodes[v].span;
    w.message = tracked_display(cfg.nodes[v]) + " allocated at line " +
                std::to_string(alloc_line) + " can reach the return at line " +
                std::to_string(leak_line) + " without being freed";
    if (early) w.message += "; the leaking path exits through an early return";
    if (via_goto) w.message += "; the leaking path jumps to an exit label (goto)";
    for (int idx : verdict.witness.nodes)
      w.trace.push_back({cfg.node(idx).span, describe_node(cfg, cfg.node(idx), idx,
                                                           verdict.witness)});
    out.push_back(std::move(w));
  }
  return out;
}

FilterOutcome filter_warnings(const std::vector<Warning>& warnings, const Codebase& cb,
                              const HintsFile& hints, const CfgBuildOptions& build_opts,
                              const LeakOptions& opts,
                              std::vector<std::string>* diagnostics) {
  FilterOutcome out;
  std::map<std::string, std::optional<Cfg>> cfg_cache;
  auto cfg_of = [&](const std::string& name) -> const Cfg* {
    auto it = cfg_cache.find(name);
    if (it == cfg_cache.end()) {
      std::optional<Cfg> built;
      if (const FunctionRecord* rec = cb.find(name)) {
        try {
          built = build_cfg(*rec, hints, build_opts);
        } catch (const CfgError& e) {
          if (diagnostics) diagnostics->push_back(name + ": " + e.what());
        }
      }
      it = cfg_cache.emplace(name, std::move(built)).first;
    }
    return it->second ? &*it->second : nullptr;
  };

  for (const Warning& w : warnings) {
    Warning copy = w;
    const Cfg* cfg = cb.find(w.function) ? cfg_of(w.function) : nullptr;
    if (!cfg) {
      append_tag(copy, "not-analyzable");
      copy.status = WarningStatus::FeasibilityRetained;
      if (diagnostics)
        diagnostics->push_back(w.function + ": retained without feasibility check");
      out.retained.push_back(std::move(copy));
      continue;
    }

    int reported = w.allocation_site ? w.allocation_site->start_line : w.line;
    std::vector<int> sites;
    for (std::size_t v = 0; v < cfg->nodes.size(); ++v)
      if (cfg->nodes[v].kind == NodeKind::Alloc &&
          std::abs(cfg->nodes[v].span.start_line - reported) <= 2)
        sites.push_back(static_cast<int>(v));
    if (sites.empty())
      for (std::size_t v = 0; v < cfg->nodes.size(); ++v)
        if (cfg->nodes[v].kind == NodeKind::Alloc) sites.push_back(static_cast<int>(v));

    // With no located site the leak question is vacuous: the model sees no
    // allocation here, so nothing can be feasible and the warning drops.
    bool keep = false;
    for (int site : sites) {
      FeasibilityVerdict verdict = check_leak_feasible(*cfg, site, opts);
      if (verdict.status == Feasibility::Feasible || verdict.status == Feasibility::Unknown) {
        keep = true;
        break;
      }
    }
    copy.status = keep ? WarningStatus::FeasibilityRetained : WarningStatus::FeasibilityDiscarded;
    (keep ? out.retained : out.discarded).push_back(std::move(copy));
  }
  return out;
}

}  // namespace leakscan
