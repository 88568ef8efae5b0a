#pragma once

#include <map>
#include <string>
#include <vector>

#include "natex/lexer.hpp"
#include "natex/parser.hpp"

namespace natex::frontend {

// One local variable of a method. `positions` holds the full-stream token
// index of every bare occurrence of the name inside the body, declarations
// included; qualified accesses (x.name), method names (name(...)) and label
// uses are excluded because renaming must not touch them.
struct VarDecl {
  std::string name;
  std::string declared_type;  // source text, e.g. "int", "int[]", "List<String>"
  int decl_count_in_method = 0;
  std::vector<int> positions;
  int decl_tok = -1;             // token index of the declared name
  bool use_before_decl = false;  // a bare occurrence precedes the declaration
};

struct MethodScope {
  std::string name;
  int body_open_tok = -1;   // '{'
  int body_close_tok = -1;  // matching '}'
  std::vector<VarDecl> locals;
  // Parameters parsed from the header; positions stay empty because renames
  // never touch them. Varargs get "[]" appended so they tag as arrays.
  std::vector<VarDecl> params;
  bool contains_lambda = false;  // "->" or "::" anywhere in the body

  bool covers(int tok_index) const {
    return tok_index > body_open_tok && tok_index < body_close_tok;
  }
};

// Scans a token stream for method bodies (brace matching plus a header
// heuristic) and collects local declarations: primitive types, String and
// single-identifier class types, including for-init, for-each, catch and
// instanceof patterns. Unrecognized declaration forms are simply not
// collected, which downstream code treats as "not shuffleable".
std::vector<MethodScope> analyze_methods(const std::vector<Token>& toks);

// Type map for type_of: names declared exactly once, mapped to their tag.
std::map<std::string, TypeTag> local_types(const MethodScope& m);

// local_types plus parameter types; a body declaration shadows a parameter.
std::map<std::string, TypeTag> scope_types(const MethodScope& m);

// Innermost method whose body contains the token index, or nullptr.
const MethodScope* enclosing_method(const std::vector<MethodScope>& methods, int tok_index);

}  // namespace natex::frontend
