#include <algorithm>
#include <map>
#include <set>

#include "leakscan/cfg.hpp"
#include "leakscan/lexer.hpp"
#include "leakscan/llm_client.hpp"
#include "stmt_parser.hpp"

namespace leakscan {

namespace {

struct Memo {
  std::map<std::string, std::vector<FunctionSummary>> done;
  std::set<std::string> visiting;  // recursion guard; cycles classify as nothing
};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<FunctionSummary> classify(const FunctionRecord& rec, const Codebase& cb,
                                      const HeuristicOptions& opts, Memo& memo, int depth);

/// Summaries for every resolvable callee, classified first so wrapper chains
/// propagate. Recursion stops at max_depth; deeper callees stay unknown.
HintsFile callee_hints(const FunctionRecord& rec, const Codebase& cb,
                       const HeuristicOptions& opts, Memo& memo, int depth) {
  HintsFile h;
  if (depth >= opts.max_depth) return h;
  for (const auto& callee : rec.callees) {
    if (callee == rec.name) continue;
    const FunctionRecord* cr = cb.find(callee);
    if (!cr) continue;
    for (const auto& s : classify(*cr, cb, opts, memo, depth + 1)) h.merge(s);
  }
  return h;
}

/// Argument token runs of the call whose callee name starts at `open - 1`,
/// split at depth-1 commas.
std::vector<std::vector<Token>> call_args(const std::vector<Token>& toks, std::size_t open) {
  std::vector<std::vector<Token>> args;
  std::vector<Token> current;
  int depth = 0;
  bool saw_comma = false;
  for (std::size_t i = open; i < toks.size(); ++i) {
    const Token& t = toks[i];
    bool opener = t.kind == TokKind::Punct && (t.text == "(" || t.text == "[" || t.text == "{");
    bool closer = t.kind == TokKind::Punct && (t.text == ")" || t.text == "]" || t.text == "}");
    if (opener) {
      ++depth;
      if (depth == 1) continue;  // the call's own opening paren
    } else if (closer) {
      --depth;
      if (depth == 0) {
        if (saw_comma || !current.empty()) args.push_back(current);
        return args;
      }
    } else if (depth == 1 && t.kind == TokKind::Punct && t.text == ",") {
      args.push_back(current);
      current.clear();
      saw_comma = true;
      continue;
    }
    current.push_back(t);
  }
  return args;
}

/// Macros are classified textually: the expression body stands in for a
/// returned value, and any free-like call on a macro parameter marks that
/// parameter's position.
std::vector<FunctionSummary> classify_macro(const FunctionRecord& rec, const HintsFile& hints,
                                            const HeuristicOptions& opts) {
  std::vector<FunctionSummary> out;
  auto lexed = tokenize(rec.body, rec.body_first_line);
  const auto& toks = lexed.tokens;

  CallMatch primary = find_primary_call(toks);
  if (primary.found &&
      (contains(opts.alloc_primitives, primary.callee) || hints.is_allocator(primary.callee)))
    out.push_back(FunctionSummary::make(rec.name, MmRole::Allocator, OwnershipTarget::ret(),
                                        Provenance::Heuristic));

  std::set<int> freed;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != TokKind::Identifier || is_non_callee_keyword(toks[i].text)) continue;
    if (!(toks[i + 1].kind == TokKind::Punct && toks[i + 1].text == "(")) continue;
    std::vector<int> indices;
    if (contains(opts.free_primitives, toks[i].text))
      indices = {0};
    else
      indices = hints.deallocator_args(toks[i].text);
    if (indices.empty()) continue;
    auto args = call_args(toks, i + 1);
    for (int idx : indices) {
      if (idx < 0 || idx >= static_cast<int>(args.size())) continue;
      std::string arg_text = join_tokens(args[static_cast<std::size_t>(idx)]);
      for (std::size_t p = 0; p < rec.params.size(); ++p)
        if (!rec.params[p].name.empty() && arg_text == rec.params[p].name)
          freed.insert(static_cast<int>(p));
    }
  }
  for (int p : freed)
    out.push_back(FunctionSummary::make(rec.name, MmRole::Deallocator, OwnershipTarget::arg(p),
                                        Provenance::Heuristic));
  return out;
}

std::vector<FunctionSummary> classify_function(const FunctionRecord& rec, const HintsFile& hints,
                                               const HeuristicOptions& opts) {
  CfgBuildOptions copts;
  copts.alloc_primitives = opts.alloc_primitives;
  copts.free_primitives = opts.free_primitives;
  Cfg cfg;
  try {
    cfg = build_cfg(rec, hints, copts);
  } catch (const CfgError&) {
    return {};
  }

  std::vector<FunctionSummary> out;
  bool allocator = false;
  for (const auto& n : cfg.nodes) {
    if (n.kind != NodeKind::Alloc) continue;
    auto aliases = self_alias_closure(cfg, n.target);
    for (int r : cfg.return_nodes()) {
      const std::string& returned = cfg.node(r).value;
      if (!returned.empty() && aliases.count(returned)) {
        allocator = true;
        break;
      }
    }
    if (allocator) break;
  }
  if (allocator)
    out.push_back(FunctionSummary::make(rec.name, MmRole::Allocator, OwnershipTarget::ret(),
                                        Provenance::Heuristic));

  std::set<int> freed;
  for (std::size_t p = 0; p < rec.params.size(); ++p) {
    const std::string& pname = rec.params[p].name;
    if (pname.empty() || pname == "...") continue;
    auto aliases = self_alias_closure(cfg, pname);
    for (const auto& n : cfg.nodes)
      if (n.kind == NodeKind::Free && aliases.count(n.value)) freed.insert(static_cast<int>(p));
  }
  for (int p : freed)
    out.push_back(FunctionSummary::make(rec.name, MmRole::Deallocator, OwnershipTarget::arg(p),
                                        Provenance::Heuristic));
  return out;
}

std::vector<FunctionSummary> classify(const FunctionRecord& rec, const Codebase& cb,
                                      const HeuristicOptions& opts, Memo& memo, int depth) {
  auto done = memo.done.find(rec.name);
  if (done != memo.done.end()) return done->second;
  if (memo.visiting.count(rec.name)) return {};
  memo.visiting.insert(rec.name);

  HintsFile hints = callee_hints(rec, cb, opts, memo, depth);
  std::vector<FunctionSummary> out = rec.kind == RecordKind::Macro
                                         ? classify_macro(rec, hints, opts)
                                         : classify_function(rec, hints, opts);

  memo.visiting.erase(rec.name);
  memo.done[rec.name] = out;
  return out;
}

}  // namespace

std::vector<FunctionSummary> heuristic_classify(const FunctionRecord& rec, const Codebase& cb,
                                                const HeuristicOptions& opts) {
  Memo memo;
  return classify(rec, cb, opts, memo, 0);
}

std::vector<FunctionSummary> heuristic_classify_all(const Codebase& cb,
                                                    const HeuristicOptions& opts) {
  Memo memo;
  std::vector<FunctionSummary> out;
  std::set<std::string> emitted;
  for (const auto& rec : cb.records) {
    if (!emitted.insert(rec.name).second) continue;
    auto summaries = classify(rec, cb, opts, memo, 0);
    out.insert(out.end(), summaries.begin(), summaries.end());
  }
  return out;
}

}  // namespace leakscan
