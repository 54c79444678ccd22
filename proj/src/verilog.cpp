#include "bugloc/verilog.hpp"

#include <algorithm>
#include <cctype>

#include "bugloc/text.hpp"

namespace bugloc {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_base_char(char c) {
  switch (c) {
    case 'b': case 'B': case 'o': case 'O':
    case 'd': case 'D': case 'h': case 'H':
      return true;
    default:
      return false;
  }
}

bool is_based_digit(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '?';
}

// Longest first within each group so maximal munch works by prefix testing.
constexpr std::string_view kOps3[] = {"<<<", ">>>", "===", "!=="};
constexpr std::string_view kOps2[] = {"<=", ">=", "==", "!=", "&&", "||",
                                      "<<", ">>", "**", "~&", "~|", "~^",
                                      "^~", "->"};
constexpr std::string_view kOps1 = "+-*/%&|^~!<>=?";
constexpr std::string_view kPunct = "()[]{};,.:#@";

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  bool done() const { return pos >= text.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos + ahead < text.size() ? text[pos + ahead] : '\0';
  }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
};

}  // namespace

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Operator: return "operator";
    case TokenKind::Number: return "number";
    case TokenKind::StringLiteral: return "string_literal";
    case TokenKind::Comment: return "comment";
    case TokenKind::Punctuation: return "punctuation";
    case TokenKind::Other: return "other";
  }
  return "other";
}

const std::unordered_set<std::string>& verilog_keywords() {
  static const std::unordered_set<std::string> kKeywords = {
      "always", "and", "assign", "automatic", "begin", "buf", "bufif0",
      "bufif1", "case", "casex", "casez", "cell", "cmos", "config",
      "deassign", "default", "defparam", "design", "disable", "edge", "else",
      "end", "endcase", "endconfig", "endfunction", "endgenerate",
      "endmodule", "endprimitive", "endspecify", "endtable", "endtask",
      "event", "for", "force", "forever", "fork", "function", "generate",
      "genvar", "highz0", "highz1", "if", "ifnone", "initial", "inout",
      "input", "instance", "integer", "join", "large", "liblist", "library",
      "localparam", "macromodule", "medium", "module", "nand", "negedge",
      "nmos", "nor", "noshowcancelled", "not", "notif0", "notif1", "or",
      "output", "parameter", "pmos", "posedge", "primitive", "pull0",
      "pull1", "pulldown", "pullup", "rcmos", "real", "realtime", "reg",
      "release", "repeat", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1",
      "scalared", "signed", "small", "specify", "specparam", "strong0",
      "strong1", "supply0", "supply1", "table", "task", "time", "tran",
      "tranif0", "tranif1", "tri", "tri0", "tri1", "triand", "trior",
      "trireg", "unsigned", "use", "vectored", "wait", "wand", "weak0",
      "weak1", "while", "wire", "wor", "xnor", "xor",
  };
  return kKeywords;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  Cursor cur{text};

  auto push = [&](TokenKind kind, std::size_t start, int line, int col) {
    tokens.push_back(Token{kind,
                           std::string(text.substr(start, cur.pos - start)),
                           line, col});
  };

  while (!cur.done()) {
    char c = cur.peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
        c == '\v') {
      cur.advance();
      continue;
    }

    const std::size_t start = cur.pos;
    const int line = cur.line;
    const int col = cur.col;

    // line comment
    if (c == '/' && cur.peek(1) == '/') {
      while (!cur.done() && cur.peek() != '\n') cur.advance();
      push(TokenKind::Comment, start, line, col);
      continue;
    }

    // block comment, may span lines
    if (c == '/' && cur.peek(1) == '*') {
      cur.advance();
      cur.advance();
      bool closed = false;
      while (!cur.done()) {
        if (cur.peek() == '*' && cur.peek(1) == '/') {
          cur.advance();
          cur.advance();
          closed = true;
          break;
        }
        cur.advance();
      }
      if (!closed) {
        throw TokenizeError(TokenizeError::Kind::UnterminatedBlockComment,
                            line, "unterminated block comment at line " +
                                      std::to_string(line));
      }
      push(TokenKind::Comment, start, line, col);
      continue;
    }

    // string literal; Verilog strings do not span lines
    if (c == '"') {
      cur.advance();
      bool closed = false;
      while (!cur.done() && cur.peek() != '\n') {
        if (cur.peek() == '\\' && cur.pos + 1 < text.size()) {
          cur.advance();
          cur.advance();
          continue;
        }
        if (cur.peek() == '"') {
          cur.advance();
          closed = true;
          break;
        }
        cur.advance();
      }
      if (!closed) {
        throw TokenizeError(TokenizeError::Kind::UnterminatedString, line,
                            "unterminated string literal at line " +
                                std::to_string(line));
      }
      push(TokenKind::StringLiteral, start, line, col);
      continue;
    }

    // number: decimal, real, or (un)sized based literal such as 8'hFF / 'b01
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '\'' && (is_base_char(cur.peek(1)) ||
                       ((cur.peek(1) == 's' || cur.peek(1) == 'S') &&
                        is_base_char(cur.peek(2)))))) {
      if (c != '\'') {
        while (std::isdigit(static_cast<unsigned char>(cur.peek())) ||
               cur.peek() == '_') {
          cur.advance();
        }
        // real literal
        if (cur.peek() == '.' &&
            std::isdigit(static_cast<unsigned char>(cur.peek(1)))) {
          cur.advance();
          while (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
            cur.advance();
          }
        }
        if ((cur.peek() == 'e' || cur.peek() == 'E') &&
            (std::isdigit(static_cast<unsigned char>(cur.peek(1))) ||
             ((cur.peek(1) == '+' || cur.peek(1) == '-') &&
              std::isdigit(static_cast<unsigned char>(cur.peek(2)))))) {
          cur.advance();
          if (cur.peek() == '+' || cur.peek() == '-') cur.advance();
          while (std::isdigit(static_cast<unsigned char>(cur.peek()))) {
            cur.advance();
          }
        }
      }
      // attached base part makes the whole thing one literal
      if (cur.peek() == '\'' &&
          (is_base_char(cur.peek(1)) ||
           ((cur.peek(1) == 's' || cur.peek(1) == 'S') &&
            is_base_char(cur.peek(2))))) {
        cur.advance();  // '
        if (cur.peek() == 's' || cur.peek() == 'S') cur.advance();
        cur.advance();  // base char
        while (is_based_digit(cur.peek())) cur.advance();
      }
      push(TokenKind::Number, start, line, col);
      continue;
    }

    if (is_ident_start(c)) {
      while (is_ident_char(cur.peek())) cur.advance();
      std::string lexeme(text.substr(start, cur.pos - start));
      TokenKind kind = verilog_keywords().count(lexeme)
                           ? TokenKind::Keyword
                           : TokenKind::Identifier;
      tokens.push_back(Token{kind, std::move(lexeme), line, col});
      continue;
    }

    // escaped identifier: backslash up to the next whitespace
    if (c == '\\') {
      cur.advance();
      while (!cur.done() && !std::isspace(static_cast<unsigned char>(
                                cur.peek()))) {
        cur.advance();
      }
      push(TokenKind::Identifier, start, line, col);
      continue;
    }

    // system tasks/functions and compiler directives lex as Other
    if ((c == '$' || c == '`') && is_ident_char(cur.peek(1))) {
      cur.advance();
      while (is_ident_char(cur.peek())) cur.advance();
      push(TokenKind::Other, start, line, col);
      continue;
    }

    {
      bool matched = false;
      for (std::string_view op : kOps3) {
        if (text.substr(cur.pos, 3) == op) {
          cur.advance();
          cur.advance();
          cur.advance();
          push(TokenKind::Operator, start, line, col);
          matched = true;
          break;
        }
      }
      if (matched) continue;
      for (std::string_view op : kOps2) {
        if (text.substr(cur.pos, 2) == op) {
          cur.advance();
          cur.advance();
          push(TokenKind::Operator, start, line, col);
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }

    if (kOps1.find(c) != std::string_view::npos) {
      cur.advance();
      push(TokenKind::Operator, start, line, col);
      continue;
    }

    if (kPunct.find(c) != std::string_view::npos) {
      cur.advance();
      push(TokenKind::Punctuation, start, line, col);
      continue;
    }

    cur.advance();
    push(TokenKind::Other, start, line, col);
  }

  return tokens;
}

SourceModule load_module(std::string text, std::string id,
                         const LoadOptions& options) {
  if (options.max_chars && text.size() > *options.max_chars) {
    throw LoadError(LoadError::Kind::TooLong,
                    "module '" + id + "' exceeds " +
                        std::to_string(*options.max_chars) + " characters");
  }

  std::vector<Token> tokens;
  try {
    tokens = tokenize(text);
  } catch (const TokenizeError& e) {
    throw LoadError(LoadError::Kind::Lex,
                    "module '" + id + "': " + e.what());
  }

  bool has_module = false;
  bool has_endmodule = false;
  std::string name;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind != TokenKind::Keyword) continue;
    if (t.lexeme == "module" || t.lexeme == "macromodule") {
      if (!has_module && i + 1 < tokens.size() &&
          tokens[i + 1].kind == TokenKind::Identifier) {
        name = tokens[i + 1].lexeme;
      }
      has_module = true;
    } else if (t.lexeme == "endmodule") {
      has_endmodule = true;
    }
  }
  if (!has_module || !has_endmodule) {
    throw LoadError(LoadError::Kind::NoModuleBoundary,
                    "module '" + id +
                        "' lacks module/endmodule boundary tokens");
  }

  std::vector<std::string> raw_lines = split_lines(text);
  const int line_count = static_cast<int>(raw_lines.size());
  if (line_count < options.min_lines) {
    throw LoadError(LoadError::Kind::TooShort,
                    "module '" + id + "' has " + std::to_string(line_count) +
                        " lines, need at least " +
                        std::to_string(options.min_lines),
                    line_count);
  }

  SourceModule module;
  module.id = std::move(id);
  module.name = std::move(name);
  module.raw_text = std::move(text);
  module.lines.reserve(raw_lines.size());
  for (int i = 0; i < line_count; ++i) {
    module.lines.push_back(LineRecord{i + 1, std::move(raw_lines[i])});
  }
  module.tokens = std::move(tokens);
  return module;
}

bool DeclaredIdentifiers::contains(std::string_view name) const {
  return std::binary_search(names.begin(), names.end(), name);
}

DeclaredIdentifiers declared_identifiers(const SourceModule& module) {
  static const std::unordered_set<std::string> kDeclKeywords = {
      "input",  "output",   "inout",   "wire",    "reg",     "integer",
      "real",   "realtime", "time",    "parameter", "localparam", "genvar",
      "tri",    "tri0",     "tri1",    "triand",  "trior",   "trireg",
      "wand",   "wor",      "supply0", "supply1", "event",
  };
  // keywords that may appear between the declaration keyword and the names
  static const std::unordered_set<std::string> kDeclModifiers = {
      "signed", "unsigned", "scalared", "vectored",
  };

  DeclaredIdentifiers out;
  const auto& tokens = module.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Token& t = tokens[i];
    if (t.kind != TokenKind::Keyword || !kDeclKeywords.count(t.lexeme)) {
      ++i;
      continue;
    }
    int bracket = 0;
    int paren = 0;
    bool after_eq = false;
    std::size_t j = i + 1;
    for (; j < tokens.size(); ++j) {
      const Token& u = tokens[j];
      if (u.kind == TokenKind::Comment) continue;
      if (u.kind == TokenKind::Punctuation) {
        const char p = u.lexeme[0];
        if (p == '[') {
          ++bracket;
        } else if (p == ']') {
          --bracket;
        } else if (p == '(') {
          ++paren;
        } else if (p == ')') {
          if (paren == 0) break;  // closing an enclosing port list
          --paren;
        } else if (p == ';' && bracket == 0 && paren == 0) {
          break;
        } else if (p == ',' && bracket == 0 && paren == 0) {
          after_eq = false;
        }
        continue;
      }
      if (u.kind == TokenKind::Operator && u.lexeme == "=" && bracket == 0 &&
          paren == 0) {
        after_eq = true;
        continue;
      }
      if (u.kind == TokenKind::Keyword) {
        if (kDeclKeywords.count(u.lexeme) || kDeclModifiers.count(u.lexeme)) {
          continue;  // e.g. "output reg signed [7:0] q"
        }
        break;  // some other construct starts here
      }
      if (u.kind == TokenKind::Identifier && bracket == 0 && paren == 0 &&
          !after_eq) {
        out.names.push_back(u.lexeme);
        out.def_sites.emplace_back(u.line, u.col);
      }
    }
    i = j;
  }

  std::sort(out.names.begin(), out.names.end());
  out.names.erase(std::unique(out.names.begin(), out.names.end()),
                  out.names.end());
  return out;
}

}  // namespace bugloc
