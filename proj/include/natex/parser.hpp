#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natex/lexer.hpp"

namespace natex::frontend {

enum class NodeKind : uint8_t {
  Infix,
  Paren,
  Literal,
  Name,
  Call,
  Index,
  FieldAccess,
  Unary,
  Cast,
  Other,  // opaque: unsupported constructs; children may still be populated
};

const char* node_kind_name(NodeKind k);

enum class TypeTag : uint8_t { Int, Long, Float, Double, Boolean, String, Unknown };

const char* type_tag_name(TypeTag t);

// Expression tree node. Spans are inclusive indices into the full token
// stream (whitespace and comments included), so rendering a node reproduces
// the exact source slice. Children never overlap and lie within the span.
struct ExprNode {
  NodeKind kind = NodeKind::Other;
  std::string op;                  // infix/unary operator, field name, cast type
  std::vector<ExprNode> children;  // Call: [callee, args...]; Index: [base, index]
  std::vector<int> op_tokens;      // operator token indices (Infix: one per join)
  int first_tok = -1;
  int last_tok = -1;
  bool postfix = false;  // ++/-- position for Unary
};

// A maximal parsed expression, e.g. one side of a statement.
struct ExprSite {
  ExprNode root;
  int line_start = 0;
  int line_end = 0;
  // The site is the full initializer of a declaration ("Type name = ..."),
  // so parenthesizing the whole expression is still valid Java. For
  // assignment or call statements it is not, and this stays false.
  bool initializer = false;
};

// Walks the token stream, segments it into statements and parses every
// maximal expression. Never fails: unsupported constructs become Other
// nodes. Structural parentheses (if/while/for/switch/catch conditions) are
// not part of any expression node.
std::vector<ExprSite> parse_expressions(const std::vector<Token>& toks);

// Parses text expected to hold exactly one expression; nullopt otherwise.
// Used to validate transformed text against the intended tree.
struct SingleExpr {
  std::vector<Token> toks;
  ExprNode root;
};
std::optional<SingleExpr> parse_single_expression(const std::string& text);

// Tree shape with parentheses erased and left-leaning same-operator chains
// spliced, so that textually different but identically grouped expressions
// compare equal. `frame` holds the significant token texts belonging to the
// node itself (operators, brackets, member names) in source order.
struct NormNode {
  NodeKind kind;
  std::string op;
  bool postfix = false;
  std::vector<std::string> frame;
  std::vector<NormNode> children;
};

// token_overrides remaps token index -> replacement text (used to model a
// relational operator mirror without re-rendering).
NormNode normalize(const ExprNode& node, const std::vector<Token>& toks,
                   const std::map<int, std::string>* token_overrides = nullptr);

bool norm_equal(const NormNode& a, const NormNode& b);

// Conservative static types. `locals` maps a name to the type of the unique
// local declaration in the enclosing method; anything unresolved is Unknown.
TypeTag type_of(const ExprNode& node, const std::vector<Token>& toks,
                const std::map<std::string, TypeTag>& locals);

TypeTag type_tag_for_declared(const std::string& declared_type);

// True if evaluating the subtree could have side effects or hide a call:
// calls, opaque regions, assignments, increments and decrements.
bool has_call_or_side_effect(const ExprNode& node);

// Significant token count within the node span.
int count_significant(const ExprNode& node, const std::vector<Token>& toks);

// Human-readable tree dump, one node per line, for the frontend debug CLI.
std::string dump_sites(const std::vector<Token>& toks, const std::vector<ExprSite>& sites);

}  // namespace natex::frontend
