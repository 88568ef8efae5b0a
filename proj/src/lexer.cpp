#include "natex/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace natex::frontend {

const char* token_cat_name(TokenCat c) {
  switch (c) {
    case TokenCat::Identifier: return "identifier";
    case TokenCat::Keyword: return "keyword";
    case TokenCat::Op: return "operator";
    case TokenCat::Separator: return "separator";
    case TokenCat::IntLit: return "int_literal";
    case TokenCat::FloatLit: return "float_literal";
    case TokenCat::StringLit: return "string_literal";
    case TokenCat::CharLit: return "char_literal";
    case TokenCat::BoolLit: return "bool_literal";
    case TokenCat::NullLit: return "null_literal";
    case TokenCat::Comment: return "comment";
    case TokenCat::Whitespace: return "whitespace";
  }
  return "?";
}

bool is_java_keyword(std::string_view s) {
  static const std::unordered_set<std::string_view> kws = {
      "abstract", "assert",   "boolean",  "break",      "byte",    "case",
      "catch",    "char",     "class",    "const",      "continue", "default",
      "do",       "double",   "else",     "enum",       "extends", "final",
      "finally",  "float",    "for",      "goto",       "if",      "implements",
      "import",   "instanceof", "int",    "interface",  "long",    "native",
      "new",      "package",  "private",  "protected",  "public",  "return",
      "short",    "static",   "strictfp", "super",      "switch",  "synchronized",
      "this",     "throw",    "throws",   "transient",  "try",     "void",
      "volatile", "while"};
  return kws.count(s) > 0;
}

namespace {

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}
bool ident_part(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}
bool is_ws(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == 0x0b;
}
bool hex_digit(unsigned char c) { return std::isxdigit(c); }

// Multi-character operators, longest first so maximal munch falls out of a
// linear scan.
const std::array<std::string_view, 27> kOps = {
    ">>>=", ">>>", ">>=", "<<=", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",   "||",  "++",  "--",  "+=", "-=", "*=", "/=", "%=", "&=",
    "|=",   "^=",  "->",  "::",  ">",  "<",  "="};

struct Lexer {
  std::string_view src;
  size_t pos = 0;
  int line = 1, col = 1;
  std::vector<Token> out;
  LexError err;
  bool failed = false;

  char peek(size_t k = 0) const {
    return pos + k < src.size() ? src[pos + k] : '\0';
  }
  bool starts(std::string_view s) const {
    return src.compare(pos, s.size(), s) == 0;
  }

  void emit(TokenCat cat, size_t start, int start_line, int start_col) {
    Token t;
    t.cat = cat;
    t.text = std::string(src.substr(start, pos - start));
    t.line = start_line;
    t.col = start_col;
    t.offset = start;
    out.push_back(std::move(t));
  }

  void advance(size_t n) {
    for (size_t i = 0; i < n && pos < src.size(); ++i) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++pos;
    }
  }

  void fail(std::string msg) {
    failed = true;
    err.message = std::move(msg);
    err.line = line;
  }

  void lex_whitespace() {
    size_t start = pos;
    int l = line, c = col;
    while (pos < src.size() && is_ws(static_cast<unsigned char>(peek()))) advance(1);
    emit(TokenCat::Whitespace, start, l, c);
  }

  void lex_line_comment() {
    size_t start = pos;
    int l = line, c = col;
    while (pos < src.size() && peek() != '\n') advance(1);
    emit(TokenCat::Comment, start, l, c);
  }

  void lex_block_comment() {
    size_t start = pos;
    int l = line, c = col;
    advance(2);
    while (pos < src.size() && !starts("*/")) advance(1);
    if (pos >= src.size()) {
      fail("unterminated block comment");
      return;
    }
    advance(2);
    emit(TokenCat::Comment, start, l, c);
  }

  // Returns false on unterminated literal.
  bool scan_quoted(char quote) {
    while (pos < src.size()) {
      char ch = peek();
      if (ch == '\\' && pos + 1 < src.size()) {
        advance(2);
        continue;
      }
      if (ch == quote) {
        advance(1);
        return true;
      }
      if (ch == '\n') return false;  // string/char literals are single-line
      advance(1);
    }
    return false;
  }

  void lex_string() {
    size_t start = pos;
    int l = line, c = col;
    if (starts("\"\"\"")) {
      // text block: scan to the closing triple quote
      advance(3);
      while (pos < src.size() && !starts("\"\"\"")) {
        if (peek() == '\\' && pos + 1 < src.size())
          advance(2);
        else
          advance(1);
      }
      if (pos >= src.size()) {
        fail("unterminated text block");
        return;
      }
      advance(3);
      emit(TokenCat::StringLit, start, l, c);
      return;
    }
    advance(1);
    if (!scan_quoted('"')) {
      fail("unterminated string literal");
      return;
    }
    emit(TokenCat::StringLit, start, l, c);
  }

  void lex_char() {
    size_t start = pos;
    int l = line, c = col;
    advance(1);
    if (!scan_quoted('\'')) {
      fail("unterminated char literal");
      return;
    }
    emit(TokenCat::CharLit, start, l, c);
  }

  // Number grammar covers decimal/hex/binary/octal ints, decimal and hex
  // floats, underscores and suffixes. Classification only; no value parsing.
  void lex_number() {
    size_t start = pos;
    int l = line, c = col;
    bool is_float = false;

    auto digits = [&](bool (*pred)(unsigned char)) {
      while (pos < src.size() &&
             (pred(static_cast<unsigned char>(peek())) || peek() == '_'))
        advance(1);
    };
    auto dec = [](unsigned char ch) { return (bool)std::isdigit(ch); };

    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      advance(2);
      digits(hex_digit);
      if (peek() == '.') {  // hex float needs a p exponent
        is_float = true;
        advance(1);
        digits(hex_digit);
      }
      if (peek() == 'p' || peek() == 'P') {
        is_float = true;
        advance(1);
        if (peek() == '+' || peek() == '-') advance(1);
        digits(dec);
      }
      // without an exponent, trailing d/f are hex digits already consumed
    } else if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
      advance(2);
      digits(dec);
    } else {
      digits(dec);
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        advance(1);
        digits(dec);
      } else if (peek() == '.' && pos > start &&
                 !ident_start(static_cast<unsigned char>(peek(1))) && peek(1) != '.') {
        // "1." with no fraction digits is still a double literal
        is_float = true;
        advance(1);
      }
      if (peek() == 'e' || peek() == 'E') {
        char after = peek(1);
        if (std::isdigit(static_cast<unsigned char>(after)) || after == '+' || after == '-') {
          is_float = true;
          advance(1);
          if (peek() == '+' || peek() == '-') advance(1);
          digits(dec);
        }
      }
    }
    if (peek() == 'f' || peek() == 'F' || peek() == 'd' || peek() == 'D') {
      is_float = true;
      advance(1);
    } else if (peek() == 'l' || peek() == 'L') {
      advance(1);
    }
    emit(is_float ? TokenCat::FloatLit : TokenCat::IntLit, start, l, c);
  }

  void lex_word() {
    size_t start = pos;
    int l = line, c = col;
    while (pos < src.size() && ident_part(static_cast<unsigned char>(peek()))) advance(1);
    std::string_view w = src.substr(start, pos - start);
    TokenCat cat;
    if (w == "true" || w == "false")
      cat = TokenCat::BoolLit;
    else if (w == "null")
      cat = TokenCat::NullLit;
    else if (is_java_keyword(w))
      cat = TokenCat::Keyword;
    else
      cat = TokenCat::Identifier;
    emit(cat, start, l, c);
  }

  void run() {
    while (pos < src.size() && !failed) {
      unsigned char ch = static_cast<unsigned char>(peek());
      int l = line, c = col;
      size_t start = pos;
      if (is_ws(ch)) {
        lex_whitespace();
      } else if (ch == '/' && peek(1) == '/') {
        lex_line_comment();
      } else if (ch == '/' && peek(1) == '*') {
        lex_block_comment();
      } else if (ch == '"') {
        lex_string();
      } else if (ch == '\'') {
        lex_char();
      } else if (std::isdigit(ch)) {
        lex_number();
      } else if (ch == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        lex_number();
      } else if (ident_start(ch)) {
        lex_word();
      } else if (starts("...")) {
        advance(3);
        emit(TokenCat::Separator, start, l, c);
      } else {
        bool matched = false;
        for (std::string_view op : kOps) {
          if (starts(op)) {
            advance(op.size());
            emit(TokenCat::Op, start, l, c);
            matched = true;
            break;
          }
        }
        if (matched) continue;
        switch (ch) {
          case '+': case '-': case '*': case '/': case '%':
          case '!': case '~': case '&': case '|': case '^':
          case '?': case ':':
            advance(1);
            emit(TokenCat::Op, start, l, c);
            break;
          case '(': case ')': case '{': case '}': case '[': case ']':
          case ';': case ',': case '.': case '@':
            advance(1);
            emit(TokenCat::Separator, start, l, c);
            break;
          default:
            // stray byte (e.g. '#', '\\'): keep round-trip intact, let the
            // parser treat the region as opaque
            advance(1);
            emit(TokenCat::Separator, start, l, c);
            break;
        }
      }
    }
  }
};

}  // namespace

std::optional<std::vector<Token>> tokenize(std::string_view source, LexError* err) {
  Lexer lx;
  lx.src = source;
  lx.run();
  if (lx.failed) {
    if (err) *err = lx.err;
    return std::nullopt;
  }
  return std::move(lx.out);
}

std::string render_tokens(const std::vector<Token>& toks, int first, int last) {
  std::string out;
  for (int i = std::max(first, 0); i <= last && i < static_cast<int>(toks.size()); ++i)
    out += toks[i].text;
  return out;
}

}  // namespace natex::frontend
