#include "leakscan/cfg.hpp"

#include <algorithm>
#include <functional>

#include "stmt_parser.hpp"

namespace leakscan {

namespace {

bool is_punct_tok(const Token& t, const char* text) {
  return t.kind == TokKind::Punct && t.text == text;
}

/// Removes parens that wrap the whole sequence, repeatedly.
std::vector<Token> strip_outer_parens(std::vector<Token> toks) {
  while (toks.size() >= 2 && is_punct_tok(toks.front(), "(") && is_punct_tok(toks.back(), ")")) {
    int depth = 0;
    bool wraps = true;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      if (is_punct_tok(toks[i], "(")) ++depth;
      else if (is_punct_tok(toks[i], ")")) --depth;
      if (depth == 0) {
        wraps = false;  // the opening paren closed before the end
        break;
      }
    }
    if (!wraps) break;
    toks.erase(toks.begin());
    toks.pop_back();
  }
  return toks;
}

bool is_type_like_group(const std::vector<Token>& toks, std::size_t open, std::size_t close) {
  // only identifiers and declarator punctuation inside: a cast, not a grouping
  bool any_ident = false;
  for (std::size_t i = open + 1; i < close; ++i) {
    const Token& t = toks[i];
    if (t.kind == TokKind::Identifier) {
      any_ident = true;
      continue;
    }
    if (t.kind == TokKind::Punct && (t.text == "*" || t.text == "[" || t.text == "]"))
      continue;
    return false;
  }
  return any_ident;
}

/// Drops leading cast groups: `(struct foo *) p` becomes `p`.
std::vector<Token> strip_casts(std::vector<Token> toks) {
  while (toks.size() >= 3 && is_punct_tok(toks[0], "(")) {
    int depth = 0;
    std::size_t close = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (is_punct_tok(toks[i], "(")) ++depth;
      else if (is_punct_tok(toks[i], ")") && --depth == 0) {
        close = i;
        break;
      }
    }
    if (close == 0 || close + 1 >= toks.size()) break;  // parens span everything
    if (!is_type_like_group(toks, 0, close)) break;
    toks.erase(toks.begin(), toks.begin() + static_cast<long>(close) + 1);
  }
  return toks;
}

bool is_identifier_chain(const std::vector<Token>& toks) {
  if (toks.empty()) return false;
  bool want_ident = true;
  for (const auto& t : toks) {
    if (want_ident) {
      if (t.kind != TokKind::Identifier) return false;
    } else {
      if (!is_punct_tok(t, "->") && !is_punct_tok(t, ".")) return false;
    }
    want_ident = !want_ident;
  }
  return !want_ident;  // must end on an identifier, not a dangling -> or .
}

const std::set<std::string>& constant_names() {
  static const std::set<std::string> k = {"NULL", "nullptr", "TRUE", "FALSE", "true", "false"};
  return k;
}

bool is_constant_expr(const std::vector<Token>& toks) {
  if (toks.size() != 1) return false;
  const Token& t = toks[0];
  if (t.kind == TokKind::Number || t.kind == TokKind::String || t.kind == TokKind::CharLit)
    return true;
  return t.kind == TokKind::Identifier && constant_names().count(t.text) != 0;
}

struct Dangling {
  int from = 0;
  EdgePolarity pol = EdgePolarity::Unconditional;
  bool from_goto = false;
};
using Frontier = std::vector<Dangling>;

struct LoopCtx {
  Frontier breaks;
  Frontier continues;
  bool is_switch = false;
  LoopCtx* parent = nullptr;

  LoopCtx* loop_for_continue() {
    for (LoopCtx* c = this; c; c = c->parent)
      if (!c->is_switch) return c;
    return nullptr;
  }
};

struct PendingGoto {
  Frontier sources;
  std::string label;
  int fallthrough = -1;  // first node lowered after the goto
};

struct Builder {
  const FunctionRecord& rec;
  const HintsFile& hints;
  const CfgBuildOptions& opts;
  Cfg cfg;
  std::map<std::string, int> labels;
  std::vector<std::string> pending_labels;
  std::vector<PendingGoto> gotos;
  std::vector<std::size_t> armed_gotos;  // waiting for their fallthrough node
  std::map<std::string, int> cond_vars;  // normalized core -> shared var
  int drop_counter = 0;

  Builder(const FunctionRecord& r, const HintsFile& h, const CfgBuildOptions& o)
      : rec(r), hints(h), opts(o) {}

  bool is_alloc_callee(const std::string& name) const {
    if (std::find(opts.alloc_primitives.begin(), opts.alloc_primitives.end(), name) !=
        opts.alloc_primitives.end())
      return true;
    return hints.is_allocator(name);
  }

  std::vector<int> dealloc_args(const std::string& name) const {
    if (std::find(opts.free_primitives.begin(), opts.free_primitives.end(), name) !=
        opts.free_primitives.end())
      return {0};
    return hints.deallocator_args(name);
  }

  bool is_sink_callee(const std::string& name) const {
    return std::find(opts.sink_calls.begin(), opts.sink_calls.end(), name) !=
           opts.sink_calls.end();
  }

  SourceSpan span_at(int line) const { return {rec.span.file, line, line}; }

  int new_node(CfgNode n) {
    cfg.nodes.push_back(std::move(n));
    return static_cast<int>(cfg.nodes.size()) - 1;
  }

  void add_edge(int from, int to, EdgePolarity pol, bool from_goto = false) {
    cfg.edges.push_back({from, to, pol, from_goto});
  }

  /// Lands the dangling frontier on `to` and resolves pending label/goto
  /// attachment: labels and goto fallthroughs bind to the next created node.
  void connect(Frontier& f, int to) {
    for (const auto& d : f) add_edge(d.from, to, d.pol, d.from_goto);
    f.clear();
    for (const auto& l : pending_labels) labels.emplace(l, to);
    pending_labels.clear();
    for (std::size_t g : armed_gotos) gotos[g].fallthrough = to;
    armed_gotos.clear();
  }

  /// Creates a node, wires the frontier into it, and returns a fresh
  /// single-exit frontier.
  Frontier emit(Frontier in, CfgNode n) {
    int idx = new_node(std::move(n));
    connect(in, idx);
    return {{idx, EdgePolarity::Unconditional, false}};
  }

  int make_branch(Frontier& in, const std::vector<Token>& cond_tokens, int line) {
    CfgNode n;
    n.kind = NodeKind::Branch;
    n.span = span_at(line);
    n.value = join_tokens(cond_tokens);
    int idx = new_node(std::move(n));
    connect(in, idx);

    bool neg = false;
    std::string core = normalize_condition(cfg.nodes[idx].value, &neg);
    int var;
    auto it = cond_vars.find(core);
    if (opts.share_conditions && it != cond_vars.end()) {
      var = it->second;
    } else {
      var = ++cfg.condition_var_count;
      cond_vars[core] = var;
    }
    cfg.branch_conds[idx] = {var, neg, core};
    return idx;
  }

  /// Pulls embedded assignments out of a condition: the assignment lowers as a
  /// statement ahead of the branch and the condition keeps the left side.
  std::vector<Token> hoist_condition_assigns(std::vector<Token> cond, Frontier& f, int line) {
    for (int round = 0; round < 4; ++round) {
      // leftmost '=' at minimal depth, with its enclosing paren group
      int best_depth = -1;
      std::size_t eq = 0, open = 0, close = 0;
      std::vector<std::size_t> stack;
      for (std::size_t i = 0; i < cond.size(); ++i) {
        if (is_punct_tok(cond[i], "(")) stack.push_back(i);
        else if (is_punct_tok(cond[i], ")")) {
          if (!stack.empty()) stack.pop_back();
        } else if (is_punct_tok(cond[i], "=")) {
          int depth = static_cast<int>(stack.size());
          if (best_depth < 0 || depth < best_depth) {
            best_depth = depth;
            eq = i;
            open = stack.empty() ? 0 : stack.back();
            close = cond.size();
          }
        }
      }
      if (best_depth < 0) return cond;
      bool grouped = best_depth > 0;
      if (grouped) {
        int depth = 0;
        for (std::size_t i = open; i < cond.size(); ++i) {
          if (is_punct_tok(cond[i], "(")) ++depth;
          else if (is_punct_tok(cond[i], ")") && --depth == 0) {
            close = i;
            break;
          }
        }
      }
      std::size_t lo = grouped ? open + 1 : 0;
      std::size_t hi = grouped ? close : cond.size();
      std::vector<Token> lhs(cond.begin() + static_cast<long>(lo),
                             cond.begin() + static_cast<long>(eq));
      std::vector<Token> rhs(cond.begin() + static_cast<long>(eq) + 1,
                             cond.begin() + static_cast<long>(hi));
      f = lower_assignment(std::move(f), lhs, rhs, line);
      // splice the left side back in place of the whole group
      std::vector<Token> next;
      next.insert(next.end(), cond.begin(), cond.begin() + static_cast<long>(grouped ? open : 0));
      next.insert(next.end(), lhs.begin(), lhs.end());
      next.insert(next.end(),
                  cond.begin() + static_cast<long>(grouped ? close + 1 : cond.size()),
                  cond.end());
      cond = std::move(next);
    }
    return cond;
  }

  /// Lowers side effects embedded in a condition (they run before the branch
  /// tests): assignments are hoisted out, remaining calls become nodes.
  Frontier lower_condition_effects(Frontier f, std::vector<Token>& cond, int line) {
    cond = hoist_condition_assigns(std::move(cond), f, line);
    if (find_primary_call(cond).found) f = lower_assignment(std::move(f), {}, cond, line);
    return f;
  }

  /// Shared lowering for `lhs = rhs`, a bare call expression (empty lhs), a
  /// declaration initializer, or a hoisted condition assignment.
  Frontier lower_assignment(Frontier f, const std::vector<Token>& lhs_in,
                            const std::vector<Token>& rhs_in, int line) {
    std::vector<Token> lhs = strip_outer_parens(lhs_in);
    std::vector<Token> rhs = strip_casts(strip_outer_parens(rhs_in));
    std::string lhs_text = join_tokens(lhs);
    CallMatch call = find_primary_call(rhs);

    enum class Emitted { None, Alloc, Free, Call, Assign, Sink } emitted = Emitted::None;

    if (call.found && is_alloc_callee(call.callee)) {
      CfgNode n;
      n.kind = NodeKind::Alloc;
      n.span = span_at(line);
      n.callee = call.callee;
      n.target = lhs_text.empty() ? "$drop" + std::to_string(drop_counter++) : lhs_text;
      for (const auto& a : call.args) n.args.push_back(join_tokens(strip_casts(a)));
      f = emit(std::move(f), std::move(n));
      emitted = Emitted::Alloc;
    } else if (call.found && !dealloc_args(call.callee).empty()) {
      std::vector<std::string> arg_texts;
      for (const auto& a : call.args) arg_texts.push_back(join_tokens(strip_casts(a)));
      for (int arg_index : dealloc_args(call.callee)) {
        if (arg_index < 0 || arg_index >= static_cast<int>(arg_texts.size())) continue;
        CfgNode n;
        n.kind = NodeKind::Free;
        n.span = span_at(line);
        n.callee = call.callee;
        n.args = arg_texts;
        n.freed_arg = arg_index;
        n.value = arg_texts[static_cast<std::size_t>(arg_index)];
        f = emit(std::move(f), std::move(n));
      }
      emitted = Emitted::Free;
    } else if (call.found && is_sink_callee(call.callee)) {
      CfgNode n;
      n.kind = NodeKind::Escape;
      n.escape = EscapeMode::SinkCall;
      n.span = span_at(line);
      n.callee = call.callee;
      for (const auto& a : call.args) n.args.push_back(join_tokens(strip_casts(a)));
      f = emit(std::move(f), std::move(n));
      emitted = Emitted::Sink;
    } else if (call.found) {
      CfgNode n;
      n.kind = NodeKind::Call;
      n.span = span_at(line);
      n.callee = call.callee;
      n.target = lhs_text;
      for (const auto& a : call.args) n.args.push_back(join_tokens(strip_casts(a)));
      f = emit(std::move(f), std::move(n));
      emitted = Emitted::Call;
    } else if (!lhs_text.empty()) {
      CfgNode n;
      n.kind = NodeKind::Assign;
      n.span = span_at(line);
      n.target = lhs_text;
      n.value = join_tokens(rhs);
      f = emit(std::move(f), std::move(n));
      emitted = Emitted::Assign;
    }

    // stores visible outside the function: into a global identifier, or
    // through an lvalue whose base the caller can reach
    if (!lhs.empty() && emitted != Emitted::None && emitted != Emitted::Free &&
        emitted != Emitted::Sink) {
      const std::string base = lhs[0].kind == TokKind::Identifier ? lhs[0].text : "";
      bool derived = lhs.size() > 1 || base.empty();
      bool base_is_local = cfg.locals.count(base) != 0 ||
                           std::find(cfg.params.begin(), cfg.params.end(), base) !=
                               cfg.params.end() ||
                           base == "$ret";
      bool escapes = false;
      if (!derived && !base.empty() && !base_is_local) escapes = true;  // global variable
      if (derived) {
        // x->f / *x / x[i]: escapes unless the base is a local
        bool local_base = !base.empty() && cfg.locals.count(base) != 0;
        if (lhs[0].kind == TokKind::Punct && lhs.size() > 1 &&
            lhs[1].kind == TokKind::Identifier)
          local_base = cfg.locals.count(lhs[1].text) != 0;  // *x form
        escapes = !local_base;
      }
      if (escapes) {
        CfgNode n;
        n.kind = NodeKind::Escape;
        n.escape = EscapeMode::GlobalStore;
        n.span = span_at(line);
        n.value = emitted == Emitted::Assign && !rhs.empty() ? join_tokens(rhs) : lhs_text;
        f = emit(std::move(f), std::move(n));
      }
    }
    return f;
  }

  Frontier lower_return(Frontier f, const Stmt& s) {
    std::vector<Token> expr = strip_outer_parens(s.expr);
    std::vector<Token> bare = strip_casts(expr);
    std::string value;
    bool escape = false;
    if (bare.empty() || is_constant_expr(bare)) {
      value = join_tokens(bare);
    } else if (is_identifier_chain(bare)) {
      value = join_tokens(bare);
      escape = true;
    } else if (find_primary_call(bare).found) {
      Token ret_tok{TokKind::Identifier, "$ret", s.line, 0};
      f = lower_assignment(std::move(f), {ret_tok}, bare, s.line);
      value = "$ret";
      escape = true;
    } else {
      value = join_tokens(bare);  // arithmetic or similar; nothing to track
    }
    if (escape) {
      CfgNode e;
      e.kind = NodeKind::Escape;
      e.escape = EscapeMode::ReturnedPointer;
      e.span = span_at(s.line);
      e.value = value;
      f = emit(std::move(f), std::move(e));
    }
    CfgNode r;
    r.kind = NodeKind::Return;
    r.span = span_at(s.line);
    r.value = value;
    int idx = new_node(std::move(r));
    connect(f, idx);
    return {};
  }

  Frontier lower_stmt(const Stmt& s, Frontier f, LoopCtx* loop) {
    switch (s.kind) {
      case StmtKind::Empty:
        return f;
      case StmtKind::Block: {
        for (const auto& c : s.children) f = lower_stmt(c, std::move(f), loop);
        return f;
      }
      case StmtKind::Decl: {
        cfg.locals.insert(s.name);
        if (s.expr.empty()) return f;
        Token name_tok{TokKind::Identifier, s.name, s.line, 0};
        return lower_assignment(std::move(f), {name_tok}, s.expr, s.line);
      }
      case StmtKind::Expr: {
        AssignMatch m = find_top_level_assign(s.expr);
        if (m.found) return lower_assignment(std::move(f), m.lhs, m.rhs, s.line);
        return lower_assignment(std::move(f), {}, s.expr, s.line);
      }
      case StmtKind::Delete: {
        if (std::find(opts.free_primitives.begin(), opts.free_primitives.end(), "delete") ==
            opts.free_primitives.end())
          return f;
        std::vector<Token> operand = strip_casts(strip_outer_parens(s.expr));
        CfgNode n;
        n.kind = NodeKind::Free;
        n.span = span_at(s.line);
        n.callee = "delete";
        n.value = join_tokens(operand);
        n.args = {n.value};
        n.freed_arg = 0;
        return emit(std::move(f), std::move(n));
      }
      case StmtKind::Return:
        return lower_return(std::move(f), s);
      case StmtKind::If: {
        std::vector<Token> cond = s.cond;
        f = lower_condition_effects(std::move(f), cond, s.line);
        int b = make_branch(f, cond, s.line);
        Frontier out;
        Frontier arm = {{b, EdgePolarity::True, false}};
        arm = lower_stmt(s.children[0], std::move(arm), loop);
        out.insert(out.end(), arm.begin(), arm.end());
        Frontier other = {{b, EdgePolarity::False, false}};
        if (s.children.size() > 1) other = lower_stmt(s.children[1], std::move(other), loop);
        out.insert(out.end(), other.begin(), other.end());
        return out;
      }
      case StmtKind::While: {
        std::vector<Token> cond = s.cond;
        f = lower_condition_effects(std::move(f), cond, s.line);
        int b = make_branch(f, cond, s.line);
        LoopCtx ctx{{}, {}, false, loop};
        Frontier body = {{b, EdgePolarity::True, false}};
        body = lower_stmt(s.children[0], std::move(body), &ctx);
        Frontier out = std::move(body);
        out.push_back({b, EdgePolarity::False, false});
        out.insert(out.end(), ctx.breaks.begin(), ctx.breaks.end());
        out.insert(out.end(), ctx.continues.begin(), ctx.continues.end());
        return out;
      }
      case StmtKind::DoWhile: {
        LoopCtx ctx{{}, {}, false, loop};
        f = lower_stmt(s.children[0], std::move(f), &ctx);
        f.insert(f.end(), ctx.continues.begin(), ctx.continues.end());
        std::vector<Token> cond = s.cond;
        f = lower_condition_effects(std::move(f), cond, s.line);
        int b = make_branch(f, cond, s.line);
        Frontier out = {{b, EdgePolarity::True, false}, {b, EdgePolarity::False, false}};
        out.insert(out.end(), ctx.breaks.begin(), ctx.breaks.end());
        return out;
      }
      case StmtKind::For: {
        f = lower_stmt(s.children[0], std::move(f), loop);  // init
        LoopCtx ctx{{}, {}, false, loop};
        int b = -1;
        Frontier body;
        if (!s.cond.empty()) {
          std::vector<Token> cond = s.cond;
          f = lower_condition_effects(std::move(f), cond, s.line);
          b = make_branch(f, cond, s.line);
          body = {{b, EdgePolarity::True, false}};
        } else {
          body = std::move(f);
        }
        body = lower_stmt(s.children[1], std::move(body), &ctx);
        body.insert(body.end(), ctx.continues.begin(), ctx.continues.end());
        if (!s.step.empty()) {
          AssignMatch m = find_top_level_assign(s.step);
          if (m.found) body = lower_assignment(std::move(body), m.lhs, m.rhs, s.line);
          else body = lower_assignment(std::move(body), {}, s.step, s.line);
        }
        Frontier out = std::move(body);
        if (b >= 0) out.push_back({b, EdgePolarity::False, false});
        out.insert(out.end(), ctx.breaks.begin(), ctx.breaks.end());
        return out;
      }
      case StmtKind::Switch:
        return lower_switch(s, std::move(f), loop);
      case StmtKind::Break: {
        if (loop) {  // binds to the nearest loop or switch
          loop->breaks.insert(loop->breaks.end(), f.begin(), f.end());
          return {};
        }
        return f;  // stray break: fall through
      }
      case StmtKind::Continue: {
        LoopCtx* c = loop ? loop->loop_for_continue() : nullptr;
        if (c) {
          c->continues.insert(c->continues.end(), f.begin(), f.end());
          return {};
        }
        return f;  // stray continue: fall through
      }
      case StmtKind::Goto: {
        gotos.push_back({std::move(f), s.name, -1});
        armed_gotos.push_back(gotos.size() - 1);
        return {};
      }
      case StmtKind::Label:
        pending_labels.push_back(s.name);
        return f;
      case StmtKind::CaseLabel:
      case StmtKind::DefaultLabel:
        return f;  // only meaningful inside a switch body
    }
    return f;
  }

  Frontier lower_switch(const Stmt& s, Frontier f, LoopCtx* loop) {
    std::vector<Token> subject = s.cond;
    f = lower_condition_effects(std::move(f), subject, s.line);
    std::string subject_text = join_tokens(strip_outer_parens(subject));

    struct Group {
      bool is_default = false;
      std::string value;
      int line = 0;
      std::vector<const Stmt*> stmts;
    };
    std::vector<Group> groups;
    std::vector<const Stmt*> dead_prefix;
    for (const auto& c : s.children) {
      if (c.kind == StmtKind::CaseLabel || c.kind == StmtKind::DefaultLabel) {
        Group g;
        g.is_default = c.kind == StmtKind::DefaultLabel;
        g.value = c.name;
        g.line = c.line;
        groups.push_back(std::move(g));
      } else if (groups.empty()) {
        dead_prefix.push_back(&c);  // unreachable in C; lowered then pruned
      } else {
        groups.back().stmts.push_back(&c);
      }
    }
    if (groups.empty()) {
      // no labels: the body is dead, the subject effects still happened
      for (const auto* c : dead_prefix) (void)lower_stmt(*c, {}, loop);
      return f;
    }

    // test chain: one equality branch per case label in source order
    std::vector<Frontier> entry(groups.size());
    int default_index = -1;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      if (groups[gi].is_default) {
        default_index = static_cast<int>(gi);
        continue;
      }
      std::vector<Token> cond = tokenize(subject_text + " == " + groups[gi].value).tokens;
      int b = make_branch(f, cond, groups[gi].line);
      entry[gi].push_back({b, EdgePolarity::True, false});
      f = {{b, EdgePolarity::False, false}};
    }
    LoopCtx ctx{{}, {}, true, loop};
    if (default_index >= 0) {
      entry[static_cast<std::size_t>(default_index)]
          .insert(entry[static_cast<std::size_t>(default_index)].end(), f.begin(), f.end());
      f.clear();
    }
    // f now holds the no-match exit (empty when a default exists)

    for (const auto* c : dead_prefix) (void)lower_stmt(*c, {}, &ctx);
    Frontier flow;  // fallthrough from the previous group
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      flow.insert(flow.end(), entry[gi].begin(), entry[gi].end());
      for (const Stmt* c : groups[gi].stmts) flow = lower_stmt(*c, std::move(flow), &ctx);
    }
    Frontier out = std::move(flow);
    out.insert(out.end(), f.begin(), f.end());
    out.insert(out.end(), ctx.breaks.begin(), ctx.breaks.end());
    out.insert(out.end(), ctx.continues.begin(), ctx.continues.end());
    return out;
  }

  bool reachable_between(int from, int to) const {
    // DFS over current edges
    std::vector<char> seen(cfg.nodes.size(), 0);
    std::vector<int> stack = {from};
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      if (n == to) return true;
      if (seen[static_cast<std::size_t>(n)]) continue;
      seen[static_cast<std::size_t>(n)] = 1;
      for (const auto& e : cfg.edges)
        if (e.from == n) stack.push_back(e.to);
    }
    return false;
  }

  void resolve_gotos() {
    for (auto& g : gotos) {
      auto it = labels.find(g.label);
      int target = it != labels.end() ? it->second : -1;
      bool forward = target >= 0;
      if (forward) {
        // a jump that would let execution revisit this goto creates a cycle;
        // those fall through like a linearized loop instead
        for (const auto& d : g.sources) {
          if (reachable_between(target, d.from)) {
            forward = false;
            break;
          }
        }
      }
      int to = forward ? target : g.fallthrough;
      if (to < 0) continue;  // e.g. goto as the last statement with no label
      for (const auto& d : g.sources) add_edge(d.from, to, d.pol, forward);
    }
  }

  void prune_unreachable() {
    std::vector<char> seen(cfg.nodes.size(), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (const auto& e : cfg.edges)
        if (e.from == n && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = 1;
          stack.push_back(e.to);
        }
    }
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) return;

    std::vector<int> remap(cfg.nodes.size(), -1);
    std::vector<CfgNode> kept;
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
      if (!seen[i]) continue;
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(std::move(cfg.nodes[i]));
    }
    std::vector<CfgEdge> kept_edges;
    for (const auto& e : cfg.edges) {
      if (!seen[static_cast<std::size_t>(e.from)] || !seen[static_cast<std::size_t>(e.to)])
        continue;
      kept_edges.push_back({remap[static_cast<std::size_t>(e.from)],
                            remap[static_cast<std::size_t>(e.to)], e.polarity, e.from_goto});
    }
    std::map<int, BranchCond> kept_conds;
    for (const auto& [idx, bc] : cfg.branch_conds)
      if (seen[static_cast<std::size_t>(idx)]) kept_conds[remap[static_cast<std::size_t>(idx)]] = bc;
    cfg.nodes = std::move(kept);
    cfg.edges = std::move(kept_edges);
    cfg.branch_conds = std::move(kept_conds);
  }

  void finalize_adjacency() {
    cfg.succ.assign(cfg.nodes.size(), {});
    cfg.pred.assign(cfg.nodes.size(), {});
    // True edges first so path enumeration explores the true arm first
    std::vector<int> order(cfg.edges.size());
    for (std::size_t i = 0; i < cfg.edges.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return static_cast<int>(cfg.edges[static_cast<std::size_t>(a)].polarity) <
             static_cast<int>(cfg.edges[static_cast<std::size_t>(b)].polarity);
    });
    for (int ei : order) {
      const auto& e = cfg.edges[static_cast<std::size_t>(ei)];
      cfg.succ[static_cast<std::size_t>(e.from)].push_back(ei);
      cfg.pred[static_cast<std::size_t>(e.to)].push_back(ei);
    }
  }

  Cfg build() {
    cfg.function = rec.name;
    cfg.file = rec.span.file;
    for (const auto& p : rec.params)
      if (!p.name.empty() && p.name != "...") cfg.params.push_back(p.name);

    CfgNode entry;
    entry.kind = NodeKind::Entry;
    entry.span = span_at(rec.span.start_line);
    new_node(std::move(entry));

    ParsedBody body = parse_body(rec.body, rec.body_first_line);
    Frontier f = {{0, EdgePolarity::Unconditional, false}};
    for (const auto& s : body.stmts) f = lower_stmt(s, std::move(f), nullptr);

    bool has_return = false;
    for (const auto& n : cfg.nodes) has_return = has_return || n.kind == NodeKind::Return;
    if (!f.empty() || !pending_labels.empty() || !armed_gotos.empty() || !has_return) {
      CfgNode r;
      r.kind = NodeKind::Return;
      r.span = span_at(rec.span.end_line);
      int idx = new_node(std::move(r));
      connect(f, idx);
    }

    resolve_gotos();
    prune_unreachable();
    finalize_adjacency();

    auto violations = validate_cfg(cfg);
    if (!violations.empty()) {
      std::string msg = rec.name + ": control flow not analyzable";
      for (const auto& v : violations) msg += "; " + v;
      throw CfgError(msg);
    }
    return std::move(cfg);
  }
};

const char* kind_label(NodeKind k) {
  switch (k) {
    case NodeKind::Entry: return "entry";
    case NodeKind::Return: return "return";
    case NodeKind::Alloc: return "alloc";
    case NodeKind::Free: return "free";
    case NodeKind::Branch: return "branch";
    case NodeKind::Assign: return "assign";
    case NodeKind::Deref: return "deref";
    case NodeKind::Escape: return "escape";
    case NodeKind::Call: return "call";
    case NodeKind::Other: return "other";
  }
  return "?";
}

}  // namespace

std::vector<int> Cfg::return_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == NodeKind::Return) out.push_back(static_cast<int>(i));
  return out;
}

Cfg build_cfg(const FunctionRecord& rec, const HintsFile& hints, const CfgBuildOptions& opts) {
  Builder b(rec, hints, opts);
  return b.build();
}

std::vector<std::string> validate_cfg(const Cfg& cfg) {
  std::vector<std::string> out;
  if (cfg.nodes.empty() || cfg.nodes[0].kind != NodeKind::Entry) {
    out.push_back("entry node missing at index 0");
    return out;
  }
  for (std::size_t i = 1; i < cfg.nodes.size(); ++i)
    if (cfg.nodes[i].kind == NodeKind::Entry)
      out.push_back("extra entry node at " + std::to_string(i));

  bool any_return = false;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& n = cfg.nodes[i];
    int true_succ = 0, false_succ = 0, plain_succ = 0;
    if (i < cfg.succ.size())
      for (int ei : cfg.succ[i]) {
        switch (cfg.edges[static_cast<std::size_t>(ei)].polarity) {
          case EdgePolarity::True: ++true_succ; break;
          case EdgePolarity::False: ++false_succ; break;
          case EdgePolarity::Unconditional: ++plain_succ; break;
        }
      }
    int total = true_succ + false_succ + plain_succ;
    if (n.kind == NodeKind::Return) {
      any_return = true;
      if (total != 0) out.push_back("return node " + std::to_string(i) + " has successors");
    } else if (n.kind == NodeKind::Branch) {
      if (true_succ != 1 || false_succ != 1 || plain_succ != 0)
        out.push_back("branch node " + std::to_string(i) + " lacks one true and one false arm");
      if (!cfg.branch_conds.count(static_cast<int>(i)))
        out.push_back("branch node " + std::to_string(i) + " has no condition record");
    } else {
      if (total != 1)
        out.push_back("node " + std::to_string(i) + " (" + kind_label(n.kind) + ") has " +
                      std::to_string(total) + " successors");
    }
  }
  if (!any_return) out.push_back("no return node");

  // acyclicity and reachability in one DFS
  std::vector<int> state(cfg.nodes.size(), 0);  // 0 new, 1 open, 2 done
  bool cyclic = false;
  std::function<void(int)> dfs = [&](int n) {
    state[static_cast<std::size_t>(n)] = 1;
    if (static_cast<std::size_t>(n) < cfg.succ.size())
      for (int ei : cfg.succ[static_cast<std::size_t>(n)]) {
        int to = cfg.edges[static_cast<std::size_t>(ei)].to;
        if (state[static_cast<std::size_t>(to)] == 1) cyclic = true;
        else if (state[static_cast<std::size_t>(to)] == 0) dfs(to);
      }
    state[static_cast<std::size_t>(n)] = 2;
  };
  dfs(0);
  if (cyclic) out.push_back("cycle detected");
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i)
    if (state[i] == 0) out.push_back("node " + std::to_string(i) + " unreachable");
  return out;
}

PathEnumeration enumerate_paths(const Cfg& cfg, int cap) {
  PathEnumeration out;
  Path current;
  std::function<void(int)> walk = [&](int n) {
    if (out.cap_exceeded) return;
    current.nodes.push_back(n);
    const CfgNode& node = cfg.node(n);
    if (node.kind == NodeKind::Return) {
      if (static_cast<int>(out.paths.size()) >= cap) {
        out.cap_exceeded = true;
      } else {
        out.paths.push_back(current);
      }
    } else {
      for (int ei : cfg.succ[static_cast<std::size_t>(n)]) {
        const CfgEdge& e = cfg.edges[static_cast<std::size_t>(ei)];
        bool is_branch = node.kind == NodeKind::Branch;
        if (is_branch)
          current.branch_literals.push_back({n, e.polarity == EdgePolarity::True});
        walk(e.to);
        if (is_branch) current.branch_literals.pop_back();
        if (out.cap_exceeded) break;
      }
    }
    current.nodes.pop_back();
  };
  walk(0);
  return out;
}

long long count_paths(const Cfg& cfg) {
  // reverse DFS memo: ways(n) = sum over successors, 1 at returns
  std::vector<long long> memo(cfg.nodes.size(), -1);
  std::function<long long(int)> ways = [&](int n) -> long long {
    long long& m = memo[static_cast<std::size_t>(n)];
    if (m >= 0) return m;
    if (cfg.node(n).kind == NodeKind::Return) return m = 1;
    long long total = 0;
    for (int ei : cfg.succ[static_cast<std::size_t>(n)])
      total += ways(cfg.edges[static_cast<std::size_t>(ei)].to);
    return m = total;
  };
  return ways(0);
}

std::set<std::string> self_alias_closure(const Cfg& cfg, const std::string& root) {
  std::set<std::string> out = {root};
  bool grew = true;
  auto single_identifier = [](const std::string& text) {
    auto toks = tokenize(text).tokens;
    return toks.size() == 1 && toks[0].kind == TokKind::Identifier;
  };
  while (grew) {
    grew = false;
    for (const auto& n : cfg.nodes) {
      if (n.kind != NodeKind::Assign) continue;
      if (!single_identifier(n.target) || !single_identifier(n.value)) continue;
      if (out.count(n.value) && !out.count(n.target)) {
        out.insert(n.target);
        grew = true;
      }
    }
  }
  return out;
}

std::string normalize_condition(const std::string& raw, bool* negated) {
  auto toks = tokenize(raw).tokens;
  bool neg = false;
  while (true) {
    toks = strip_outer_parens(toks);
    if (!toks.empty() && is_punct_tok(toks[0], "!")) {
      neg = !neg;
      toks.erase(toks.begin());
      continue;
    }
    break;
  }
  if (negated) *negated = neg;
  return join_tokens(toks);
}

std::string normalize_expr(const std::string& raw) {
  auto toks = strip_casts(strip_outer_parens(tokenize(raw).tokens));
  return join_tokens(toks);
}

std::string to_dot(const Cfg& cfg) {
  std::string out = "digraph \"" + cfg.function + "\" {\n";
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& n = cfg.nodes[i];
    std::string label = std::to_string(i) + ": " + kind_label(n.kind);
    std::string detail = n.kind == NodeKind::Alloc ? n.target + " = " + n.callee
                         : !n.value.empty()        ? n.value
                                                   : n.callee;
    if (!detail.empty()) label += "\\n" + detail;
    out += "  n" + std::to_string(i) + " [label=\"" + label + "\"";
    if (n.kind == NodeKind::Branch) out += ", shape=diamond";
    out += "];\n";
  }
  for (const auto& e : cfg.edges) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to);
    if (e.polarity == EdgePolarity::True) out += " [label=T]";
    else if (e.polarity == EdgePolarity::False) out += " [label=F]";
    out += ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace leakscan
