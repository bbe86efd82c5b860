#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "leakscan/extraction.hpp"
#include "leakscan/feasibility.hpp"
#include "support/gen.hpp"

using namespace leakscan;

namespace {

Cfg cfg_from(const std::string& src, const std::string& name, const HintsFile& hints = {},
             const CfgBuildOptions& opts = {}) {
  auto res = parse_source("mem.c", src);
  const FunctionRecord* rec = res.codebase.find(name);
  REQUIRE(rec != nullptr);
  return build_cfg(*rec, hints, opts);
}

int alloc_node(const Cfg& cfg, int which = 0) {
  int seen = 0;
  for (std::size_t v = 0; v < cfg.nodes.size(); ++v)
    if (cfg.nodes[v].kind == NodeKind::Alloc && seen++ == which) return static_cast<int>(v);
  REQUIRE(false);
  return -1;
}

HintsFile cert_hints() {
  HintsFile h;
  h.merge(FunctionSummary::make("copy_cert", MmRole::Allocator, OwnershipTarget::ret()));
  h.merge(FunctionSummary::make("drop_cert", MmRole::Deallocator, OwnershipTarget::arg(0)));
  return h;
}

const char* kCertSrc = R"(
char *use_cert(char *src, int b1, int b2) {
  char *cert = copy_cert(src);
  if (b1) {
    return cert;
  }
  if (b2) {
    return 0;
  }
  free(cert);
  return 0;
}
)";

void check_witness_shape(const Cfg& cfg, const Path& w) {
  REQUIRE(!w.nodes.empty());
  CHECK(w.nodes.front() == 0);
  CHECK(cfg.node(w.nodes.back()).kind == NodeKind::Return);
  for (std::size_t i = 0; i + 1 < w.nodes.size(); ++i) {
    bool found = false;
    for (const auto& e : cfg.edges)
      if (e.from == w.nodes[i] && e.to == w.nodes[i + 1]) found = true;
    CHECK_MESSAGE(found, "witness steps over a non-edge at position " << i);
  }
}

// Condition consistency a path must satisfy when branches share variables:
// equal normalized core text implies equal truth value along the path.
bool consistent_choice(const Cfg& cfg, const Path& p, bool share) {
  if (!share) return true;
  std::map<std::string, bool> val;
  for (const auto& bc : p.branch_literals) {
    const auto& cond = cfg.branch_conds.at(bc.node);
    bool core = bc.taken != cond.negated;
    auto [it, fresh] = val.emplace(cond.core, core);
    if (!fresh && it->second != core) return false;
  }
  return true;
}

// Local effect interpreter, deliberately separate from replay_path.
StateTriple run_effects(const Cfg& cfg, const Path& p, int site) {
  std::set<std::string> aliases = self_alias_closure(cfg, cfg.node(site).target);
  auto hits = [&](const CfgNode& n) {
    if (!n.value.empty() && aliases.count(normalize_expr(n.value))) return true;
    for (const auto& a : n.args)
      if (aliases.count(normalize_expr(a))) return true;
    return false;
  };
  StateTriple t;
  for (int idx : p.nodes) {
    const CfgNode& n = cfg.node(idx);
    if (idx == site) t.alloc = true;
    else if (n.kind == NodeKind::Free && aliases.count(normalize_expr(n.value))) t.freed = true;
    else if (n.kind == NodeKind::Escape && hits(n)) t.escaped = true;
  }
  return t;
}

bool oracle_leak(const Cfg& cfg, int site, bool share) {
  auto en = enumerate_paths(cfg, 200000);
  REQUIRE_FALSE(en.cap_exceeded);
  for (const auto& p : en.paths) {
    if (!consistent_choice(cfg, p, share)) continue;
    StateTriple t = run_effects(cfg, p, site);
    if (t.alloc && !t.freed && !t.escaped) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("encoding refuses non-allocation nodes") {
  Cfg cfg = cfg_from("void f(int n) { char *p = malloc(n); free(p); }\n", "f");
  CHECK_THROWS_AS((void)encode_leak_feasibility(cfg, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS((void)encode_leak_feasibility(cfg, -1, {}), std::invalid_argument);
  CHECK_THROWS_AS((void)encode_leak_feasibility(cfg, 99, {}), std::invalid_argument);
}

TEST_CASE("encoding carries the documented structure") {
  Cfg cfg = cfg_from(kCertSrc, "use_cert", cert_hints());
  int site = alloc_node(cfg);
  LeakEncoding enc = encode_leak_feasibility(cfg, site, {});
  CHECK(enc.site == site);
  CHECK(enc.tracked == "cert");
  CHECK(enc.aliases.count("cert") == 1);
  CHECK(enc.edge_vars.size() == cfg.edges.size());
  CHECK(enc.reach_vars.size() == cfg.nodes.size());
  CHECK(enc.state_vars.size() == cfg.nodes.size());
  for (const auto& sv : enc.state_vars) {
    CHECK(sv.alloc > 0);
    CHECK(sv.freed > 0);
    CHECK(sv.escaped > 0);
  }
  // one at-most-one group per node except Entry
  CHECK(enc.formula.at_most_one.size() == cfg.nodes.size() - 1);
  // reach(Entry) asserted as a unit
  bool entry_unit = false;
  for (const auto& cl : enc.formula.clauses)
    if (cl.size() == 1 && cl[0] == enc.reach_vars[0]) entry_unit = true;
  CHECK(entry_unit);
  // two Branch nodes, each with a condition variable
  CHECK(enc.branch_literal_vars.size() == 2);
}

TEST_CASE("branch-guarded leak is feasible with the expected witness") {
  Cfg cfg = cfg_from(kCertSrc, "use_cert", cert_hints());
  int site = alloc_node(cfg);
  FeasibilityVerdict v = check_leak_feasible(cfg, site, {});
  REQUIRE(v.status == Feasibility::Feasible);
  check_witness_shape(cfg, v.witness);

  // the leak slips past the first branch (false) and takes the second (true)
  REQUIRE(v.witness.branch_literals.size() == 2);
  CHECK_FALSE(v.witness.branch_literals[0].taken);
  CHECK(v.witness.branch_literals[1].taken);

  REQUIRE(v.leak_return >= 0);
  CHECK(cfg.node(v.leak_return).value == "0");
  CHECK(v.witness.nodes.back() == v.leak_return);

  StateTriple end = replay_path(cfg, v.witness, site);
  CHECK(end.alloc);
  CHECK_FALSE(end.freed);
  CHECK_FALSE(end.escaped);
}

TEST_CASE("allocation freed on the only path is infeasible") {
  Cfg cfg = cfg_from("void f(int n) { char *p = malloc(n); free(p); }\n", "f");
  CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
}

TEST_CASE("escapes make the leak infeasible") {
  SUBCASE("returned directly") {
    Cfg cfg = cfg_from("char *f(int n) { char *p = malloc(n); return p; }\n", "f");
    CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
  }
  SUBCASE("returned through an alias") {
    Cfg cfg = cfg_from("char *f(int n) { char *p = malloc(n); char *q = p; return q; }\n", "f");
    CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
  }
  SUBCASE("stored to a global") {
    Cfg cfg = cfg_from("void f(int n) { char *p = malloc(n); keep = p; }\n", "f");
    CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
  }
  SUBCASE("handed to a sink call") {
    CfgBuildOptions bo;
    bo.sink_calls = {"stash"};
    Cfg cfg = cfg_from("void f(int n) { char *p = malloc(n); stash(p); }\n", "f", {}, bo);
    CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
  }
}

TEST_CASE("validated deallocator call sites count as frees") {
  const char* src = "void owner(char *src) { char *h = copy_cert(src); drop_cert(h); }\n";
  Cfg cfg = cfg_from(src, "owner", cert_hints());
  CHECK(check_leak_feasible(cfg, alloc_node(cfg), {}).status == Feasibility::Infeasible);
}

TEST_CASE("shared condition variables decide the dual-branch leak") {
  const char* src = R"(
void dual(int c) {
  char *p = 0;
  if (c) {
    p = malloc(8);
  }
  if (c) {
    free(p);
  }
}
)";
  Cfg cfg = cfg_from(src, "dual");
  int site = alloc_node(cfg);
  LeakOptions shared;
  CHECK(check_leak_feasible(cfg, site, shared).status == Feasibility::Infeasible);
  LeakOptions indep;
  indep.share_conditions = false;
  FeasibilityVerdict v = check_leak_feasible(cfg, site, indep);
  REQUIRE(v.status == Feasibility::Feasible);
  StateTriple end = replay_path(cfg, v.witness, site);
  CHECK((end.alloc && !end.freed && !end.escaped));
}

TEST_CASE("success guards pin allocation-failure branches") {
  const char* src = R"(
char *g(int n) {
  char *p = malloc(n);
  if (!p) {
    return 0;
  }
  return p;
}
)";
  Cfg cfg = cfg_from(src, "g");
  int site = alloc_node(cfg);

  LeakOptions guarded;
  LeakEncoding enc = encode_leak_feasibility(cfg, site, guarded);
  CHECK(enc.guard_units.size() == 1);
  CHECK(enc.guard_units[0] > 0);  // core `p` pinned true: pointer non-null
  CHECK(check_leak_feasible(cfg, site, guarded).status == Feasibility::Infeasible);

  LeakOptions raw;
  raw.success_guards = false;
  CHECK(encode_leak_feasibility(cfg, site, raw).guard_units.empty());
  FeasibilityVerdict v = check_leak_feasible(cfg, site, raw);
  REQUIRE(v.status == Feasibility::Feasible);
  // without the guard the failure arm reports: allocated, returns 0 unfreed
  CHECK(cfg.node(v.leak_return).value == "0");
}

TEST_CASE("null tests before the site are not pinned") {
  const char* src = R"(
char *lazy(char *p, int n) {
  if (!p) {
    p = malloc(n);
  }
  return p;
}
)";
  Cfg cfg = cfg_from(src, "lazy");
  int site = alloc_node(cfg);
  LeakEncoding enc = encode_leak_feasibility(cfg, site, {});
  CHECK(enc.guard_units.empty());
  // the allocated value always reaches the return and escapes there
  CHECK(check_leak_feasible(cfg, site, {}).status == Feasibility::Infeasible);
}

TEST_CASE("post-allocation null test pins to the null-is-false polarity") {
  const char* src = R"(
char *mixed(char *q, int n) {
  if (q == 0) {
    n = 1;
  }
  char *p = malloc(n);
  if (p == 0) {
    return 0;
  }
  use(p);
  return p;
}
)";
  Cfg cfg = cfg_from(src, "mixed");
  int site = alloc_node(cfg);
  LeakEncoding enc = encode_leak_feasibility(cfg, site, {});
  REQUIRE(enc.guard_units.size() == 1);
  CHECK(enc.guard_units[0] < 0);  // core `p==0` pinned false
  CHECK(check_leak_feasible(cfg, site, {}).status == Feasibility::Infeasible);
}

TEST_CASE("budget miss reports unknown") {
  const char* src = R"(
void b(int n) {
  char *p = malloc(n);
  if (c1) { n = 1; }
  if (c2) { n = 2; }
}
)";
  Cfg cfg = cfg_from(src, "b");
  LeakOptions opts;
  opts.solver_budget = 0;
  FeasibilityVerdict v = check_leak_feasible(cfg, alloc_node(cfg), opts);
  CHECK(v.status == Feasibility::Unknown);
  CHECK(v.reason == "solver budget exhausted");
}

TEST_CASE("replay_path reports frees on alternate routes") {
  Cfg cfg = cfg_from(kCertSrc, "use_cert", cert_hints());
  int site = alloc_node(cfg);
  // the all-false route runs into free(cert)
  Path p;
  int cur = 0;
  p.nodes.push_back(cur);
  while (cfg.node(cur).kind != NodeKind::Return) {
    int pick = -1;
    for (int ei : cfg.succ[static_cast<std::size_t>(cur)]) {
      const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
      if (cfg.node(cur).kind != NodeKind::Branch || e.polarity == EdgePolarity::False) {
        if (cfg.node(cur).kind == NodeKind::Branch)
          p.branch_literals.push_back({cur, false});
        pick = e.to;
        break;
      }
    }
    REQUIRE(pick >= 0);
    p.nodes.push_back(pick);
    cur = pick;
  }
  StateTriple end = replay_path(cfg, p, site);
  CHECK(end.alloc);
  CHECK(end.freed);
  CHECK_FALSE(end.escaped);
}

TEST_CASE("scan flags the early-return leak once") {
  const char* src = R"(
int setup(char *src, int flag) {
  char *obj = copy_cert(src);
  if (!obj) {
    return -1;
  }
  if (read_flag(flag)) {
    return -1;
  }
  finish(obj);
  drop_cert(obj);
  return 0;
}
)";
  auto res = parse_source("setup.c", src);
  const FunctionRecord* rec = res.codebase.find("setup");
  REQUIRE(rec != nullptr);
  auto warnings = scan_function(*rec, cert_hints());
  REQUIRE(warnings.size() == 1);
  const Warning& w = warnings[0];
  CHECK(w.source == WarningSource::Internal);
  CHECK(w.function == "setup");
  CHECK(w.file == "setup.c");
  CHECK(w.status == WarningStatus::FeasibilityRetained);
  CHECK(w.line == 3);  // the copy_cert call line
  REQUIRE(w.allocation_site.has_value());
  CHECK(w.allocation_site->start_line == 3);
  CHECK(w.message.find("early return") != std::string::npos);
  CHECK(w.message.find("'obj'") != std::string::npos);
  REQUIRE(!w.trace.empty());
  CHECK(w.trace.front().text == "entry");
  CHECK(w.trace.back().text.rfind("return", 0) == 0);
}

TEST_CASE("scan stays quiet on leak-free and allocation-free bodies") {
  auto res = parse_source("ok.c", R"(
void fine(int n) {
  char *p = malloc(n);
  use(p);
  free(p);
}
int pure(int a, int b) {
  return a + b;
}
)");
  const FunctionRecord* fine = res.codebase.find("fine");
  const FunctionRecord* pure = res.codebase.find("pure");
  REQUIRE(fine != nullptr);
  REQUIRE(pure != nullptr);
  CHECK(scan_function(*fine, {}).empty());
  CHECK(scan_function(*pure, {}).empty());
}

TEST_CASE("scan names goto exits") {
  const char* src = R"(
int gshape(int n) {
  char *p = malloc(n);
  if (n < 0) {
    goto out;
  }
  free(p);
  return 0;
out:
  return -1;
}
)";
  auto res = parse_source("g.c", src);
  const FunctionRecord* rec = res.codebase.find("gshape");
  REQUIRE(rec != nullptr);
  auto warnings = scan_function(*rec, {});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].message.find("goto") != std::string::npos);
}

TEST_CASE("scan dedups same-line allocations leaking through one return") {
  auto res = parse_source("d.c", "void two(int n) { char *a = malloc(1), *b = malloc(1); }\n");
  const FunctionRecord* rec = res.codebase.find("two");
  REQUIRE(rec != nullptr);
  auto warnings = scan_function(*rec, {});
  CHECK(warnings.size() == 1);
}

TEST_CASE("scan reports discarded allocation results") {
  auto res = parse_source("s.c", "void sloppy(int n) { malloc(8); }\n");
  const FunctionRecord* rec = res.codebase.find("sloppy");
  REQUIRE(rec != nullptr);
  auto warnings = scan_function(*rec, {});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].message.find("unassigned malloc result") != std::string::npos);
}

TEST_CASE("scan checks each allocation site independently") {
  const char* src = R"(
void pair(int n) {
  char *a = malloc(1);
  char *b = malloc(2);
  free(a);
}
)";
  auto res = parse_source("p.c", src);
  const FunctionRecord* rec = res.codebase.find("pair");
  REQUIRE(rec != nullptr);
  auto warnings = scan_function(*rec, {});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].message.find("'b'") != std::string::npos);
}

TEST_CASE("filter retains feasible warnings and discards infeasible ones") {
  auto res = parse_source("w.c", R"(
void leaky(int n) {
  char *p = malloc(n);
  use(p);
}
void tidy(int n) {
  char *p = malloc(n);
  free(p);
}
)");
  Warning on_leaky;
  on_leaky.function = "leaky";
  on_leaky.file = "w.c";
  on_leaky.line = 3;
  Warning on_tidy;
  on_tidy.function = "tidy";
  on_tidy.file = "w.c";
  on_tidy.line = 7;
  auto out = filter_warnings({on_leaky, on_tidy}, res.codebase, {});
  REQUIRE(out.retained.size() == 1);
  REQUIRE(out.discarded.size() == 1);
  CHECK(out.retained[0].function == "leaky");
  CHECK(out.retained[0].status == WarningStatus::FeasibilityRetained);
  CHECK(out.discarded[0].function == "tidy");
  CHECK(out.discarded[0].status == WarningStatus::FeasibilityDiscarded);
}

TEST_CASE("filter keeps unresolvable warnings with a tag") {
  Codebase empty;
  Warning w;
  w.function = "ghost";
  w.line = 10;
  std::vector<std::string> diags;
  auto out = filter_warnings({w}, empty, {}, {}, {}, &diags);
  REQUIRE(out.retained.size() == 1);
  CHECK(out.discarded.empty());
  CHECK(out.retained[0].tags.find("not-analyzable") != std::string::npos);
  CHECK(!diags.empty());
}

TEST_CASE("filter matches reported lines within two and falls back to all sites") {
  const char* src = R"(
void twosite(int n) {
  char *a = malloc(1);
  use(a);
  use(a);
  use(a);
  char *b = malloc(2);
  free(b);
}
)";
  auto res = parse_source("t.c", src);
  auto warn_at = [](int line) {
    Warning w;
    w.function = "twosite";
    w.file = "t.c";
    w.line = line;
    return w;
  };
  // line 7 matches only the freed site b -> discarded
  auto near_b = filter_warnings({warn_at(7)}, res.codebase, {});
  CHECK(near_b.retained.empty());
  CHECK(near_b.discarded.size() == 1);
  // line 3 matches the leaking site a -> retained
  auto near_a = filter_warnings({warn_at(3)}, res.codebase, {});
  CHECK(near_a.retained.size() == 1);
  // line far from both falls back to all sites, a leaks -> retained
  auto far = filter_warnings({warn_at(40)}, res.codebase, {});
  CHECK(far.retained.size() == 1);
}

TEST_CASE("filter never discards unknown verdicts") {
  // the leak question needs branch decisions here, so a zero budget cannot
  // settle it either way
  auto res = parse_source("u.c", R"(
void busy(int n) {
  char *p = malloc(n);
  if (c1) { use(p); }
  if (c2) { use(p); }
}
)");
  Warning w;
  w.function = "busy";
  w.file = "u.c";
  w.line = 3;
  LeakOptions opts;
  opts.solver_budget = 0;
  auto out = filter_warnings({w}, res.codebase, {}, {}, opts);
  REQUIRE(out.retained.size() == 1);
  CHECK(out.discarded.empty());
}

TEST_CASE("random bodies: solver verdicts match exhaustive enumeration") {
  std::mt19937 rng(6180339u);
  int feasible_seen = 0;
  int infeasible_seen = 0;
  for (int round = 0; round < 80; ++round) {
    testsupport::BodyGenConfig bc;
    bc.value_returns = round % 2 == 1;
    testsupport::BodyGen gen(rng, bc);
    std::string src = gen.function("fn");
    auto res = parse_source("r.c", src);
    const FunctionRecord* rec = res.codebase.find("fn");
    REQUIRE(rec != nullptr);
    Cfg cfg = build_cfg(*rec, {}, {});
    int site = -1;
    for (std::size_t v = 0; v < cfg.nodes.size(); ++v)
      if (cfg.nodes[v].kind == NodeKind::Alloc) { site = static_cast<int>(v); break; }
    if (site < 0) continue;

    for (bool share : {true, false}) {
      LeakOptions opts;
      opts.share_conditions = share;
      opts.success_guards = false;
      FeasibilityVerdict v = check_leak_feasible(cfg, site, opts);
      bool expect = oracle_leak(cfg, site, share);
      CAPTURE(round);
      CAPTURE(share);
      CAPTURE(src);
      REQUIRE(v.status != Feasibility::Unknown);
      CHECK((v.status == Feasibility::Feasible) == expect);
      if (v.status == Feasibility::Feasible) {
        ++feasible_seen;
        check_witness_shape(cfg, v.witness);
        CHECK(consistent_choice(cfg, v.witness, share));
        StateTriple end = replay_path(cfg, v.witness, site);
        CHECK((end.alloc && !end.freed && !end.escaped));
        StateTriple local = run_effects(cfg, v.witness, site);
        CHECK(local.alloc == end.alloc);
        CHECK(local.freed == end.freed);
        CHECK(local.escaped == end.escaped);
      } else {
        ++infeasible_seen;
      }
    }
  }
  CHECK(feasible_seen > 10);
  CHECK(infeasible_seen > 10);
}
