#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leakscan {

enum class TokKind {
  Identifier,
  Number,
  String,
  CharLit,
  Punct,
  Directive,  // whole preprocessor line(s), continuations folded in
};

struct Token {
  TokKind kind = TokKind::Punct;
  std::string text;
  int line = 1;
  std::size_t offset = 0;  // byte offset of the token start in the lexed text
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<std::string> diagnostics;
};

/// Error-tolerant C/C++ tokenizer. Comments are dropped, strings and char
/// literals are kept as single tokens, unterminated literals produce a
/// diagnostic and recovery at end of line. `first_line` sets the line number
/// of the first byte so fragments keep file coordinates.
LexResult tokenize(std::string_view src, int first_line = 1);

/// True for tokens that can never be a callee name (`if`, `sizeof`, ...).
bool is_non_callee_keyword(const std::string& ident);

/// Token texts concatenated without separators; the canonical spelling used
/// everywhere expressions are compared (`a -> b` and `a->b` collide).
std::string join_tokens(const std::vector<Token>& toks, std::size_t begin = 0,
                        std::size_t end = static_cast<std::size_t>(-1));

}  // namespace leakscan
