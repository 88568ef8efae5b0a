#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace natex::frontend {

enum class TokenCat : uint8_t {
  Identifier,
  Keyword,
  Op,
  Separator,
  IntLit,
  FloatLit,
  StringLit,
  CharLit,
  BoolLit,
  NullLit,
  Comment,
  Whitespace,
};

const char* token_cat_name(TokenCat c);

struct Token {
  TokenCat cat;
  std::string text;
  int line = 1;       // 1-based start line
  int col = 1;        // 1-based start column, in bytes
  size_t offset = 0;  // byte offset of the first character

  bool significant() const {
    return cat != TokenCat::Comment && cat != TokenCat::Whitespace;
  }
  bool is(TokenCat c, std::string_view t) const { return cat == c && text == t; }
  bool is_op(std::string_view t) const { return is(TokenCat::Op, t); }
  bool is_sep(std::string_view t) const { return is(TokenCat::Separator, t); }
  bool is_kw(std::string_view t) const { return is(TokenCat::Keyword, t); }
  bool is_literal() const {
    return cat == TokenCat::IntLit || cat == TokenCat::FloatLit ||
           cat == TokenCat::StringLit || cat == TokenCat::CharLit ||
           cat == TokenCat::BoolLit || cat == TokenCat::NullLit;
  }
};

struct LexError {
  std::string message;
  int line = 0;
};

// Lexes Java source. Invariant on success: concatenating the text of every
// token (comments and whitespace included) reproduces the input byte for
// byte. Unterminated strings, chars or block comments fail the whole file;
// callers are expected to skip such files and count them.
std::optional<std::vector<Token>> tokenize(std::string_view source, LexError* err = nullptr);

bool is_java_keyword(std::string_view s);

// Concatenation of token texts for the inclusive range [first, last].
std::string render_tokens(const std::vector<Token>& toks, int first, int last);

}  // namespace natex::frontend
