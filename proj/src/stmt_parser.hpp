// Tolerant statement-tree parser over the lexer's token stream. Internal to
// the library: the CFG builder and the syntactic classifier consume this
// shape; callers outside src/ work with the CFG instead.
#pragma once

#include <string>
#include <vector>

#include "leakscan/lexer.hpp"

namespace leakscan {

enum class StmtKind {
  Block,
  If,
  While,
  DoWhile,
  For,
  Switch,
  Return,
  Goto,
  Label,
  Break,
  Continue,
  Decl,
  Expr,
  CaseLabel,
  DefaultLabel,
  Empty,
  Delete,
};

/// Field use by kind:
///   If:       cond, children = {then[, else]}
///   While:    cond, children = {body}
///   DoWhile:  cond, children = {body}
///   For:      cond (may be empty = always true), step, children = {init, body}
///   Switch:   cond = subject, children = flat body with Case/Default markers
///   Return:   expr = returned value tokens (empty for bare return)
///   Goto:     name = target label
///   Label:    name; the labeled statement follows as its own statement
///   Decl:     name, decl_type, expr = initializer tokens
///   Expr:     expr = whole expression
///   Delete:   expr = operand
///   CaseLabel: name = constant text
struct Stmt {
  StmtKind kind = StmtKind::Empty;
  int line = 1;
  std::vector<Token> cond;
  std::vector<Token> expr;
  std::vector<Token> step;
  std::string name;
  std::string decl_type;
  std::vector<Stmt> children;
};

struct ParsedBody {
  std::vector<Stmt> stmts;
  std::vector<std::string> diagnostics;
};

ParsedBody parse_statements(const std::vector<Token>& tokens);

/// Parses a function body (text between braces, exclusive). `first_line` is
/// the line of the opening brace, so reported lines are absolute.
ParsedBody parse_body(const std::string& body, int first_line);

struct CallMatch {
  bool found = false;
  std::string callee;
  std::vector<std::vector<Token>> args;  // split at depth-1 commas
};

/// Leftmost named call at minimal paren depth: the call whose result the
/// statement is "about". Member calls (preceded by . or ->) and control
/// keywords do not match; `new` expressions match with callee "new".
CallMatch find_primary_call(const std::vector<Token>& expr);

struct AssignMatch {
  bool found = false;
  std::vector<Token> lhs;
  std::vector<Token> rhs;
};

/// First plain `=` at depth 0. Compound operators and comparisons are single
/// tokens at the lexer level, so they never match.
AssignMatch find_top_level_assign(const std::vector<Token>& expr);

}  // namespace leakscan
