#include "leakscan/lexer.hpp"

#include <cctype>
#include <set>

namespace leakscan {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// longest-match punctuator table, longest first
const char* const kPuncts3[] = {"<<=", ">>=", "...", "->*"};
const char* const kPuncts2[] = {"->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
                                "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
                                "^=", "::", "##"};

}  // namespace

LexResult tokenize(std::string_view src, int first_line) {
  LexResult out;
  int line = first_line;
  std::size_t i = 0;
  const std::size_t n = src.size();
  bool at_line_start = true;  // only whitespace seen since the last newline

  auto peek = [&](std::size_t k) -> char { return i + k < n ? src[i + k] : '\0'; };

  while (i < n) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      at_line_start = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && peek(1) == '*') {
      std::size_t start_line = static_cast<std::size_t>(line);
      i += 2;
      bool closed = false;
      while (i < n) {
        if (src[i] == '\n') ++line;
        if (src[i] == '*' && peek(1) == '/') {
          i += 2;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed)
        out.diagnostics.push_back("unterminated block comment starting at line " +
                                  std::to_string(start_line));
      at_line_start = false;
      continue;
    }
    if (c == '#' && at_line_start) {
      // whole preprocessor line, folding backslash continuations
      int dline = line;
      std::size_t dstart = i;
      std::string text;
      while (i < n) {
        if (src[i] == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
          text += '\n';
          i += peek(1) == '\n' ? 2 : 3;
          ++line;
          continue;
        }
        if (src[i] == '\n') break;
        text += src[i];
        ++i;
      }
      out.tokens.push_back({TokKind::Directive, text, dline, dstart});
      continue;  // the '\n' is handled by the main loop
    }
    at_line_start = false;
    if (c == '"' || c == '\'') {
      char quote = c;
      int qline = line;
      std::size_t qstart = i;
      std::string text(1, quote);
      ++i;
      bool closed = false;
      while (i < n) {
        char d = src[i];
        if (d == '\\' && i + 1 < n) {
          text += d;
          text += src[i + 1];
          if (src[i + 1] == '\n') ++line;
          i += 2;
          continue;
        }
        if (d == '\n') break;  // recover at end of line
        text += d;
        ++i;
        if (d == quote) {
          closed = true;
          break;
        }
      }
      if (!closed) {
        out.diagnostics.push_back(std::string("unterminated ") +
                                  (quote == '"' ? "string" : "char") + " literal at line " +
                                  std::to_string(qline));
        text += quote;
      }
      out.tokens.push_back({quote == '"' ? TokKind::String : TokKind::CharLit, text, qline, qstart});
      continue;
    }
    if (ident_start(c)) {
      std::size_t b = i;
      while (i < n && ident_char(src[i])) ++i;
      out.tokens.push_back({TokKind::Identifier, std::string(src.substr(b, i - b)), line, b});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::size_t b = i;
      ++i;
      while (i < n) {
        char d = src[i];
        if (ident_char(d) || d == '.') {
          ++i;
          continue;
        }
        // exponent sign: 1e-5, 0x1p+3
        if ((d == '+' || d == '-') && i > b) {
          char prev = src[i - 1];
          if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
            ++i;
            continue;
          }
        }
        break;
      }
      out.tokens.push_back({TokKind::Number, std::string(src.substr(b, i - b)), line, b});
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts3) {
      if (src.compare(i, 3, p) == 0) {
        out.tokens.push_back({TokKind::Punct, p, line, i});
        i += 3;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (const char* p : kPuncts2) {
      if (src.compare(i, 2, p) == 0) {
        out.tokens.push_back({TokKind::Punct, p, line, i});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    out.tokens.push_back({TokKind::Punct, std::string(1, c), line, i});
    ++i;
  }
  return out;
}

bool is_non_callee_keyword(const std::string& ident) {
  static const std::set<std::string> kKeywords = {
      "if",      "while",   "for",     "switch",   "return", "sizeof",
      "defined", "alignof", "_Alignof", "typeof",  "__typeof__",
      "case",    "goto",    "do",      "else",     "new",    "delete",
      "static_cast", "reinterpret_cast", "const_cast", "dynamic_cast"};
  return kKeywords.count(ident) != 0;
}

std::string join_tokens(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end && i < toks.size(); ++i) out += toks[i].text;
  return out;
}

}  // namespace leakscan
