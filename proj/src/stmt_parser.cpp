#include "stmt_parser.hpp"

#include <algorithm>

namespace leakscan {

namespace {

bool is_open(const Token& t) {
  return t.kind == TokKind::Punct && (t.text == "(" || t.text == "[" || t.text == "{");
}
bool is_close(const Token& t) {
  return t.kind == TokKind::Punct && (t.text == ")" || t.text == "]" || t.text == "}");
}
bool is_punct(const Token& t, const char* text) {
  return t.kind == TokKind::Punct && t.text == text;
}
bool is_ident(const Token& t, const char* text) {
  return t.kind == TokKind::Identifier && t.text == text;
}

/// Splits at depth-0 commas. Empty segments are preserved.
std::vector<std::vector<Token>> split_commas(const std::vector<Token>& toks) {
  std::vector<std::vector<Token>> out(1);
  int depth = 0;
  for (const auto& t : toks) {
    if (is_open(t)) ++depth;
    else if (is_close(t)) --depth;
    if (depth == 0 && is_punct(t, ",")) {
      out.emplace_back();
      continue;
    }
    out.back().push_back(t);
  }
  return out;
}

struct Parser {
  const std::vector<Token>& t;
  std::size_t i = 0;
  std::vector<std::string> diags;

  explicit Parser(const std::vector<Token>& toks) : t(toks) {}

  bool done() const { return i >= t.size(); }
  const Token& cur() const { return t[i]; }
  int line() const { return done() ? (t.empty() ? 1 : t.back().line) : cur().line; }

  void skip_directives() {
    while (!done() && cur().kind == TokKind::Directive) ++i;
  }

  void diag(const std::string& msg) {
    diags.push_back("line " + std::to_string(line()) + ": " + msg);
  }

  /// cur() must be "("; returns the inner tokens and advances past ")".
  std::vector<Token> paren_group() {
    std::vector<Token> inner;
    if (done() || !is_punct(cur(), "(")) {
      diag("expected (");
      return inner;
    }
    int depth = 0;
    while (!done()) {
      const Token& tok = cur();
      ++i;
      if (tok.kind == TokKind::Directive) continue;
      if (is_punct(tok, "(")) {
        if (depth++ > 0) inner.push_back(tok);
        continue;
      }
      if (is_punct(tok, ")")) {
        if (--depth == 0) return inner;
        inner.push_back(tok);
        continue;
      }
      inner.push_back(tok);
    }
    diag("unbalanced parentheses");
    return inner;
  }

  /// Tokens up to the next depth-0 ';' (consumed) or '}' (left in place).
  std::vector<Token> collect_statement() {
    std::vector<Token> out;
    int depth = 0;
    while (!done()) {
      const Token& tok = cur();
      if (tok.kind == TokKind::Directive) {
        ++i;
        continue;
      }
      if (depth == 0 && is_punct(tok, ";")) {
        ++i;
        return out;
      }
      if (depth == 0 && is_punct(tok, "}")) return out;
      if (is_open(tok)) ++depth;
      else if (is_close(tok)) --depth;
      out.push_back(tok);
      ++i;
    }
    return out;
  }

  void expect_semi() {
    skip_directives();
    if (!done() && is_punct(cur(), ";")) ++i;
  }

  std::vector<Stmt> parse_until_close() {
    std::vector<Stmt> out;
    while (true) {
      skip_directives();
      if (done()) return out;
      if (is_punct(cur(), "}")) {
        ++i;
        return out;
      }
      out.push_back(parse_stmt());
    }
  }

  Stmt parse_stmt() {
    skip_directives();
    Stmt s;
    s.line = line();
    if (done()) return s;
    const Token& tok = cur();

    if (is_punct(tok, ";")) {
      ++i;
      return s;
    }
    if (is_punct(tok, "{")) {
      ++i;
      s.kind = StmtKind::Block;
      s.children = parse_until_close();
      return s;
    }
    if (tok.kind == TokKind::Identifier) {
      const std::string& w = tok.text;
      if (w == "if") return parse_if();
      if (w == "while") return parse_while();
      if (w == "do") return parse_do();
      if (w == "for") return parse_for();
      if (w == "switch") return parse_switch();
      if (w == "return") {
        ++i;
        s.kind = StmtKind::Return;
        s.expr = collect_statement();
        return s;
      }
      if (w == "goto") {
        ++i;
        s.kind = StmtKind::Goto;
        if (!done() && cur().kind == TokKind::Identifier) {
          s.name = cur().text;
          ++i;
        } else {
          diag("goto without label");
        }
        expect_semi();
        return s;
      }
      if (w == "break" || w == "continue") {
        s.kind = w == "break" ? StmtKind::Break : StmtKind::Continue;
        ++i;
        expect_semi();
        return s;
      }
      if (w == "case") {
        ++i;
        s.kind = StmtKind::CaseLabel;
        std::vector<Token> value;
        int depth = 0;
        while (!done()) {
          if (depth == 0 && is_punct(cur(), ":")) {
            ++i;
            break;
          }
          if (is_open(cur())) ++depth;
          else if (is_close(cur())) --depth;
          value.push_back(cur());
          ++i;
        }
        s.name = join_tokens(value);
        return s;
      }
      if (w == "default") {
        ++i;
        s.kind = StmtKind::DefaultLabel;
        if (!done() && is_punct(cur(), ":")) ++i;
        return s;
      }
      if (w == "delete") {
        ++i;
        s.kind = StmtKind::Delete;
        if (!done() && is_punct(cur(), "[")) {
          ++i;
          if (!done() && is_punct(cur(), "]")) ++i;
        }
        s.expr = collect_statement();
        return s;
      }
      if (i + 1 < t.size() && is_punct(t[i + 1], ":")) {
        s.kind = StmtKind::Label;
        s.name = w;
        i += 2;
        return s;
      }
    }
    return decl_or_expr();
  }

  Stmt parse_if() {
    Stmt s;
    s.kind = StmtKind::If;
    s.line = line();
    ++i;
    skip_directives();
    s.cond = paren_group();
    s.children.push_back(parse_stmt());
    skip_directives();
    if (!done() && is_ident(cur(), "else")) {
      ++i;
      s.children.push_back(parse_stmt());
    }
    return s;
  }

  Stmt parse_while() {
    Stmt s;
    s.kind = StmtKind::While;
    s.line = line();
    ++i;
    skip_directives();
    s.cond = paren_group();
    s.children.push_back(parse_stmt());
    return s;
  }

  Stmt parse_do() {
    Stmt s;
    s.kind = StmtKind::DoWhile;
    s.line = line();
    ++i;
    s.children.push_back(parse_stmt());
    skip_directives();
    if (!done() && is_ident(cur(), "while")) {
      ++i;
      skip_directives();
      s.cond = paren_group();
    } else {
      diag("do without while");
    }
    expect_semi();
    return s;
  }

  Stmt parse_for() {
    Stmt s;
    s.kind = StmtKind::For;
    s.line = line();
    ++i;
    skip_directives();
    std::vector<Token> inner = paren_group();
    // split the header at depth-0 semicolons: init; cond; step
    std::vector<std::vector<Token>> parts(1);
    int depth = 0;
    for (const auto& tok : inner) {
      if (is_open(tok)) ++depth;
      else if (is_close(tok)) --depth;
      if (depth == 0 && is_punct(tok, ";")) {
        parts.emplace_back();
        continue;
      }
      parts.back().push_back(tok);
    }
    Stmt init;
    init.line = s.line;
    if (!parts[0].empty()) init = classify_decl_or_expr(parts[0], s.line);
    if (parts.size() > 1) s.cond = parts[1];
    if (parts.size() > 2) s.step = parts[2];
    s.children.push_back(std::move(init));
    s.children.push_back(parse_stmt());
    return s;
  }

  Stmt parse_switch() {
    Stmt s;
    s.kind = StmtKind::Switch;
    s.line = line();
    ++i;
    skip_directives();
    s.cond = paren_group();
    skip_directives();
    if (!done() && is_punct(cur(), "{")) {
      ++i;
      s.children = parse_until_close();
    } else {
      s.children.push_back(parse_stmt());
    }
    return s;
  }

  Stmt decl_or_expr() {
    int start_line = line();
    std::vector<Token> toks = collect_statement();
    if (toks.empty()) {
      Stmt s;
      s.line = start_line;
      return s;
    }
    return classify_decl_or_expr(toks, start_line);
  }

  /// Declaration heuristic: leading run of identifiers mixed with '*' whose
  /// shape is <base idents> '*'* <name>, stopping at '=', ',', '[' or the
  /// statement end. Two identifiers, or one plus a star, make a declaration;
  /// anything else is an expression.
  Stmt classify_decl_or_expr(const std::vector<Token>& toks, int start_line) {
    Stmt fallback;
    fallback.kind = StmtKind::Expr;
    fallback.line = start_line;
    fallback.expr = toks;

    if (toks[0].kind != TokKind::Identifier || is_non_callee_keyword(toks[0].text))
      return fallback;
    std::size_t k = 0;
    int idents = 0;
    while (k < toks.size()) {
      if (toks[k].kind == TokKind::Identifier) ++idents;
      else if (!is_punct(toks[k], "*")) break;
      ++k;
    }
    bool boundary = k == toks.size() ||
                    (toks[k].kind == TokKind::Punct &&
                     (toks[k].text == "=" || toks[k].text == "," || toks[k].text == "["));
    if (!boundary || toks[k - 1].kind != TokKind::Identifier) return fallback;
    if (idents < 2) return fallback;  // a lone identifier is an expression

    auto segments = split_commas(toks);
    std::vector<Stmt> decls;
    std::string base_type;
    for (std::size_t seg_idx = 0; seg_idx < segments.size(); ++seg_idx) {
      const auto& seg = segments[seg_idx];
      std::vector<Token> left = seg;
      std::vector<Token> init;
      int depth = 0;
      for (std::size_t p = 0; p < seg.size(); ++p) {
        if (is_open(seg[p])) ++depth;
        else if (is_close(seg[p])) --depth;
        else if (depth == 0 && is_punct(seg[p], "=")) {
          left.assign(seg.begin(), seg.begin() + static_cast<long>(p));
          init.assign(seg.begin() + static_cast<long>(p) + 1, seg.end());
          break;
        }
      }
      // declarator name: last depth-0 identifier (array suffixes sit at depth 1)
      std::size_t name_pos = left.size();
      depth = 0;
      for (std::size_t p = left.size(); p > 0; --p) {
        if (is_close(left[p - 1])) ++depth;
        else if (is_open(left[p - 1])) --depth;
        else if (depth == 0 && left[p - 1].kind == TokKind::Identifier) {
          name_pos = p - 1;
          break;
        }
      }
      if (name_pos == left.size()) continue;  // no declarator here; skip segment
      std::size_t decl_stars_begin = name_pos;
      while (decl_stars_begin > 0 && is_punct(left[decl_stars_begin - 1], "*"))
        --decl_stars_begin;
      if (seg_idx == 0) {
        std::vector<Token> base(left.begin(), left.begin() + static_cast<long>(decl_stars_begin));
        base_type = join_tokens(base);
      }
      Stmt d;
      d.kind = StmtKind::Decl;
      d.line = seg.empty() ? start_line : seg[0].line;
      d.name = left[name_pos].text;
      d.decl_type = base_type;
      for (std::size_t p = decl_stars_begin; p < name_pos; ++p) d.decl_type += "*";
      d.expr = std::move(init);
      decls.push_back(std::move(d));
    }
    if (decls.empty()) return fallback;
    if (decls.size() == 1) return decls[0];
    Stmt block;
    block.kind = StmtKind::Block;
    block.line = start_line;
    block.children = std::move(decls);
    return block;
  }
};

}  // namespace

ParsedBody parse_statements(const std::vector<Token>& tokens) {
  Parser p(tokens);
  ParsedBody out;
  while (true) {
    p.skip_directives();
    if (p.done()) break;
    if (is_punct(p.cur(), "}")) {
      // stray close: tolerate and keep going
      ++p.i;
      continue;
    }
    out.stmts.push_back(p.parse_stmt());
  }
  out.diagnostics = std::move(p.diags);
  return out;
}

ParsedBody parse_body(const std::string& body, int first_line) {
  auto lexed = tokenize(body, first_line);
  ParsedBody out = parse_statements(lexed.tokens);
  for (auto& d : lexed.diagnostics) out.diagnostics.push_back(d);
  return out;
}

CallMatch find_primary_call(const std::vector<Token>& expr) {
  CallMatch best;
  int best_depth = 0;
  int depth = 0;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    const Token& tok = expr[i];
    if (is_open(tok)) {
      ++depth;
      continue;
    }
    if (is_close(tok)) {
      --depth;
      continue;
    }
    if (tok.kind != TokKind::Identifier) continue;
    if (is_ident(tok, "new")) {
      if (!best.found || depth < best_depth) {
        best.found = true;
        best.callee = "new";
        best.args.clear();
        best_depth = depth;
      }
      continue;
    }
    if (is_non_callee_keyword(tok.text)) continue;
    if (i + 1 >= expr.size() || !is_punct(expr[i + 1], "(")) continue;
    if (i > 0 && (is_punct(expr[i - 1], ".") || is_punct(expr[i - 1], "->"))) continue;
    if (best.found && depth >= best_depth) continue;
    best.found = true;
    best.callee = tok.text;
    best_depth = depth;
    best.args.clear();
    int d2 = 0;
    std::vector<Token> inner;
    for (std::size_t k = i + 1; k < expr.size(); ++k) {
      if (is_open(expr[k])) {
        if (d2++ > 0) inner.push_back(expr[k]);
        continue;
      }
      if (is_close(expr[k])) {
        if (--d2 == 0) break;
        inner.push_back(expr[k]);
        continue;
      }
      if (d2 > 0) inner.push_back(expr[k]);
    }
    if (!inner.empty()) best.args = split_commas(inner);
  }
  return best;
}

AssignMatch find_top_level_assign(const std::vector<Token>& expr) {
  AssignMatch m;
  int depth = 0;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    const Token& tok = expr[i];
    if (is_open(tok)) ++depth;
    else if (is_close(tok)) --depth;
    else if (depth == 0 && is_punct(tok, "=")) {
      m.found = true;
      m.lhs.assign(expr.begin(), expr.begin() + static_cast<long>(i));
      m.rhs.assign(expr.begin() + static_cast<long>(i) + 1, expr.end());
      return m;
    }
  }
  return m;
}

}  // namespace leakscan
