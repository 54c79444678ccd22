#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bugloc/errors.hpp"

namespace bugloc {

enum class TokenKind {
  Keyword,
  Identifier,
  Operator,
  Number,
  StringLiteral,
  Comment,
  Punctuation,
  Other,
};

std::string_view token_kind_name(TokenKind kind);

// line and col are 1-based; col is the byte offset of the first character of
// the lexeme within its line (tabs count as one column).
struct Token {
  TokenKind kind;
  std::string lexeme;
  int line;
  int col;
};

// Single-pass scanner over Verilog source. It is a lexer, not a parser:
// mutation only needs token spans, kinds and a handful of keyword positions.
// Line comments, block comments and string literals each become one token.
// Sized/based literals such as 8'hFF lex as a single Number token.
//
// Throws TokenizeError on an unterminated block comment or string literal;
// either makes a file unusable as a seed module.
std::vector<Token> tokenize(std::string_view text);

struct LineRecord {
  int index;  // 1-based
  std::string text;
};

struct SourceModule {
  std::string id;
  std::string name;
  std::string raw_text;
  std::vector<LineRecord> lines;
  std::vector<Token> tokens;

  const LineRecord& line(int index) const { return lines.at(index - 1); }
};

struct LoadOptions {
  // Modules with fewer lines are rejected ("more than 20 lines of code").
  int min_lines = 21;
  // Optional cap on raw length; off by default.
  std::optional<std::size_t> max_chars;
};

// Validates and wraps Verilog text as a SourceModule. Throws LoadError with
// kind TooShort, NoModuleBoundary, TooLong or Lex.
SourceModule load_module(std::string text, std::string id,
                         const LoadOptions& options = {});

const std::unordered_set<std::string>& verilog_keywords();

// Identifiers introduced by declaration statements (wire/reg/input/...),
// together with the positions of their defining occurrences.
struct DeclaredIdentifiers {
  std::vector<std::string> names;              // sorted, unique
  std::vector<std::pair<int, int>> def_sites;  // (line, col) of definitions

  bool contains(std::string_view name) const;
};

DeclaredIdentifiers declared_identifiers(const SourceModule& module);

}  // namespace bugloc
