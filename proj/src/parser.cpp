#include "natex/parser.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace natex::frontend {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Infix: return "infix";
    case NodeKind::Paren: return "paren";
    case NodeKind::Literal: return "literal";
    case NodeKind::Name: return "name";
    case NodeKind::Call: return "call";
    case NodeKind::Index: return "index";
    case NodeKind::FieldAccess: return "field_access";
    case NodeKind::Unary: return "unary";
    case NodeKind::Cast: return "cast";
    case NodeKind::Other: return "other";
  }
  return "?";
}

const char* type_tag_name(TypeTag t) {
  switch (t) {
    case TypeTag::Int: return "int";
    case TypeTag::Long: return "long";
    case TypeTag::Float: return "float";
    case TypeTag::Double: return "double";
    case TypeTag::Boolean: return "boolean";
    case TypeTag::String: return "string";
    case TypeTag::Unknown: return "unknown";
  }
  return "?";
}

namespace {

// Binding powers follow the Java operator precedence table. Left-associative
// operators parse the right side one level tighter; assignment is
// right-associative.
struct OpInfo {
  int lbp;
  int rbp;
};

std::optional<OpInfo> infix_binding(const Token& t) {
  if (t.cat == TokenCat::Keyword && t.text == "instanceof") return OpInfo{90, 91};
  if (t.cat != TokenCat::Op) return std::nullopt;
  const std::string& o = t.text;
  if (o == "=" || o == "+=" || o == "-=" || o == "*=" || o == "/=" || o == "%=" ||
      o == "&=" || o == "|=" || o == "^=" || o == "<<=" || o == ">>=" || o == ">>>=")
    return OpInfo{10, 10};
  if (o == "?") return OpInfo{20, 20};
  if (o == "||") return OpInfo{30, 31};
  if (o == "&&") return OpInfo{40, 41};
  if (o == "|") return OpInfo{50, 51};
  if (o == "^") return OpInfo{60, 61};
  if (o == "&") return OpInfo{70, 71};
  if (o == "==" || o == "!=") return OpInfo{80, 81};
  if (o == "<" || o == "<=" || o == ">" || o == ">=") return OpInfo{90, 91};
  if (o == "<<" || o == ">>" || o == ">>>") return OpInfo{100, 101};
  if (o == "+" || o == "-") return OpInfo{110, 111};
  if (o == "*" || o == "/" || o == "%") return OpInfo{120, 121};
  return std::nullopt;
}

constexpr int kUnaryBp = 130;

bool is_primitive_type_kw(const Token& t) {
  if (t.cat != TokenCat::Keyword) return false;
  const std::string& s = t.text;
  return s == "int" || s == "long" || s == "float" || s == "double" ||
         s == "boolean" || s == "byte" || s == "short" || s == "char";
}

bool is_condition_keyword(const Token& t) {
  if (t.cat != TokenCat::Keyword) return false;
  const std::string& s = t.text;
  return s == "if" || s == "while" || s == "for" || s == "switch" ||
         s == "synchronized" || s == "catch";
}

struct Parser {
  const std::vector<Token>& toks;
  const std::vector<int>& sig;  // indices of significant tokens
  int pos;                      // current index into sig
  int end;                      // exclusive end in sig
  bool failed = false;

  const Token* peek(int k = 0) const {
    int p = pos + k;
    if (p < 0 || p >= end) return nullptr;
    return &toks[sig[p]];
  }
  int tok_index(int k = 0) const { return sig[pos + k]; }
  bool at_end() const { return pos >= end; }
  void bump() { ++pos; }
  void fail() { failed = true; }

  // Scans a plausible generic argument list starting at `<` (sig position p).
  // Returns the sig position just past the closing bracket, or -1 when the
  // region cannot be generics. Deliberately strict: literals and most
  // operators abort the scan, so comparisons keep parsing as comparisons.
  int generics_scan(int p) const {
    if (p >= end || !toks[sig[p]].is_op("<")) return -1;
    int depth = 0;
    int i = p;
    while (i < end) {
      const Token& t = toks[sig[i]];
      if (t.is_op("<")) {
        ++depth;
      } else if (t.is_op(">")) {
        --depth;
      } else if (t.is_op(">>")) {
        depth -= 2;
      } else if (t.is_op(">>>")) {
        depth -= 3;
      } else if (t.cat == TokenCat::Identifier || t.is_sep(".") || t.is_sep(",") ||
                 t.is_op("?") || t.is_op("&") || t.is_sep("[") || t.is_sep("]") ||
                 t.is_kw("extends") || t.is_kw("super") || is_primitive_type_kw(t)) {
        // allowed inside a type argument list
      } else {
        return -1;
      }
      ++i;
      if (depth == 0) return i;
      if (depth < 0) return -1;
    }
    return -1;
  }

  ExprNode make_leaf(NodeKind kind, int sig_pos) const {
    ExprNode n;
    n.kind = kind;
    n.first_tok = sig[sig_pos];
    n.last_tok = sig[sig_pos];
    return n;
  }

  // --- primary / prefix ----------------------------------------------------

  ExprNode parse_prefix() {
    const Token* t = peek();
    if (!t) {
      fail();
      return {};
    }
    if (t->cat == TokenCat::Identifier || t->is_kw("this") || t->is_kw("super")) {
      ExprNode n = make_leaf(NodeKind::Name, pos);
      n.op = t->text;
      bump();
      return parse_postfix(std::move(n));
    }
    if (t->is_literal()) {
      ExprNode n = make_leaf(NodeKind::Literal, pos);
      bump();
      return parse_postfix(std::move(n));
    }
    if (t->is_op("+") || t->is_op("-") || t->is_op("!") || t->is_op("~") ||
        t->is_op("++") || t->is_op("--")) {
      ExprNode n;
      n.kind = NodeKind::Unary;
      n.op = t->text;
      n.first_tok = tok_index();
      n.op_tokens.push_back(tok_index());
      bump();
      ExprNode operand = parse_expr(kUnaryBp);
      if (failed) return {};
      n.last_tok = operand.last_tok;
      n.children.push_back(std::move(operand));
      return n;
    }
    if (t->is_sep("(")) return parse_paren_or_cast();
    if (t->is_kw("new")) return parse_new();
    fail();
    return {};
  }

  // Distinguishing a cast from a parenthesized expression is undecidable
  // without bindings; the tiebreak is chosen so that a wrong guess can only
  // lose transform sites, never corrupt them (casts get type Unknown and are
  // ineligible as swap operands anyway).
  ExprNode parse_paren_or_cast() {
    int open_sig = pos;
    int close_sig = matching_paren(pos);
    if (close_sig < 0) {
      fail();
      return {};
    }
    if (looks_like_cast(open_sig, close_sig)) {
      ExprNode n;
      n.kind = NodeKind::Cast;
      n.first_tok = sig[open_sig];
      std::string ty;
      for (int i = open_sig + 1; i < close_sig; ++i) ty += toks[sig[i]].text;
      n.op = ty;
      pos = close_sig + 1;
      ExprNode operand = parse_expr(kUnaryBp);
      if (failed) return {};
      n.last_tok = operand.last_tok;
      n.children.push_back(std::move(operand));
      return n;
    }
    ExprNode n;
    n.kind = NodeKind::Paren;
    n.first_tok = sig[open_sig];
    bump();  // '('
    ExprNode inner = parse_expr(0);
    if (failed || at_end() || !peek()->is_sep(")")) {
      // not a plain parenthesized expression; swallow the region opaquely
      failed = false;
      ExprNode other;
      other.kind = NodeKind::Other;
      other.first_tok = sig[open_sig];
      other.last_tok = sig[close_sig];
      pos = close_sig + 1;
      return parse_postfix(std::move(other));
    }
    n.last_tok = tok_index();
    bump();  // ')'
    n.children.push_back(std::move(inner));
    return parse_postfix(std::move(n));
  }

  int matching_paren(int open_sig) const {
    int depth = 0;
    for (int i = open_sig; i < end; ++i) {
      const Token& t = toks[sig[i]];
      if (t.is_sep("(")) ++depth;
      else if (t.is_sep(")")) {
        --depth;
        if (depth == 0) return i;
      }
    }
    return -1;
  }

  bool looks_like_cast(int open_sig, int close_sig) const {
    if (close_sig <= open_sig + 1) return false;  // "()" is never a cast
    int after = close_sig + 1;
    if (after >= end) return false;
    const Token& next = toks[sig[after]];
    bool primitive = false;
    // content: primitive or dotted identifier, optional generics, optional []
    int i = open_sig + 1;
    if (is_primitive_type_kw(toks[sig[i]])) {
      primitive = true;
      ++i;
    } else if (toks[sig[i]].cat == TokenCat::Identifier) {
      ++i;
      while (i + 1 < close_sig && toks[sig[i]].is_sep(".") &&
             toks[sig[i + 1]].cat == TokenCat::Identifier)
        i += 2;
      if (i < close_sig && toks[sig[i]].is_op("<")) {
        int g = generics_scan(i);
        if (g < 0) return false;
        i = g;
      }
    } else {
      return false;
    }
    while (i + 1 < close_sig && toks[sig[i]].is_sep("[") && toks[sig[i + 1]].is_sep("]"))
      i += 2;
    if (i != close_sig) return false;
    // what may follow a cast: an operand. For class types, +/- are treated
    // as arithmetic on the parenthesized value instead (the common case).
    bool operand_start = next.cat == TokenCat::Identifier || next.is_literal() ||
                         next.is_sep("(") || next.is_op("!") || next.is_op("~") ||
                         next.is_kw("this") || next.is_kw("super") || next.is_kw("new");
    if (primitive)
      return operand_start || next.is_op("+") || next.is_op("-");
    return operand_start;
  }

  ExprNode parse_new() {
    ExprNode n;
    n.kind = NodeKind::Other;
    n.first_tok = tok_index();
    bump();  // 'new'
    const Token* t = peek();
    if (!t) {
      fail();
      return {};
    }
    if (is_primitive_type_kw(*t)) {
      bump();
    } else if (t->cat == TokenCat::Identifier) {
      bump();
      while (peek() && peek()->is_sep(".") && peek(1) &&
             peek(1)->cat == TokenCat::Identifier) {
        bump();
        bump();
      }
      if (peek() && peek()->is_op("<")) {
        int g = generics_scan(pos);
        if (g < 0) {
          fail();
          return {};
        }
        pos = g;
      }
    } else {
      fail();
      return {};
    }
    t = peek();
    if (t && t->is_sep("(")) {
      int close = matching_paren(pos);
      if (close < 0) {
        fail();
        return {};
      }
      parse_args_into(n, close);
      if (failed) return {};
      n.last_tok = sig[close];
      pos = close + 1;
      // anonymous class body, if present, is opaque and ends the statement
      // segment anyway
      return parse_postfix(std::move(n));
    }
    if (t && t->is_sep("[")) {
      while (peek() && peek()->is_sep("[")) {
        int close = matching_bracket(pos);
        if (close < 0) {
          fail();
          return {};
        }
        if (close > pos + 1) {
          Parser sub{toks, sig, pos + 1, close, false};
          ExprNode dim = sub.parse_expr(0);
          if (!sub.failed && sub.pos == close) n.children.push_back(std::move(dim));
        }
        n.last_tok = sig[close];
        pos = close + 1;
      }
      return parse_postfix(std::move(n));
    }
    fail();
    return {};
  }

  int matching_bracket(int open_sig) const {
    int depth = 0;
    for (int i = open_sig; i < end; ++i) {
      const Token& t = toks[sig[i]];
      if (t.is_sep("[")) ++depth;
      else if (t.is_sep("]")) {
        --depth;
        if (depth == 0) return i;
      }
    }
    return -1;
  }

  // Parses a parenthesized argument list ending at sig position `close`.
  // Successfully parsed arguments become children; anything unparseable
  // degrades the node to Other but keeps the parsed children.
  void parse_args_into(ExprNode& n, int close) {
    bump();  // '('
    if (pos == close) return;
    while (pos < close) {
      Parser sub{toks, sig, pos, close, false};
      ExprNode arg = sub.parse_expr(0);
      if (sub.failed) {
        n.kind = NodeKind::Other;
        pos = close;
        return;
      }
      pos = sub.pos;
      n.children.push_back(std::move(arg));
      if (pos == close) return;
      if (peek()->is_sep(",")) {
        bump();
        continue;
      }
      n.kind = NodeKind::Other;
      pos = close;
      return;
    }
  }

  // --- postfix ---------------------------------------------------------------

  ExprNode parse_postfix(ExprNode lhs) {
    for (;;) {
      const Token* t = peek();
      if (!t) return lhs;
      if (t->is_sep(".")) {
        const Token* m = peek(1);
        if (m && m->cat == TokenCat::Identifier) {
          ExprNode fa;
          fa.kind = NodeKind::FieldAccess;
          fa.op = m->text;
          fa.first_tok = lhs.first_tok;
          fa.last_tok = tok_index(1);
          fa.children.push_back(std::move(lhs));
          bump();
          bump();
          lhs = std::move(fa);
          if (peek() && peek()->is_sep("(")) {
            lhs = finish_call(std::move(lhs));
            if (failed) return {};
          }
          continue;
        }
        if (m && (m->is_kw("this") || m->is_kw("class") || m->is_kw("new") ||
                  m->is_kw("super"))) {
          ExprNode other;
          other.kind = NodeKind::Other;
          other.first_tok = lhs.first_tok;
          other.last_tok = tok_index(1);
          other.children.push_back(std::move(lhs));
          bump();
          bump();
          lhs = std::move(other);
          continue;
        }
        if (m && m->is_op("<")) {
          // explicit generic method invocation: obj.<T>m(...)
          int g = generics_scan(pos + 1);
          if (g >= 0 && g < end && toks[sig[g]].cat == TokenCat::Identifier &&
              g + 1 < end && toks[sig[g + 1]].is_sep("(")) {
            ExprNode other;
            other.kind = NodeKind::Other;
            other.first_tok = lhs.first_tok;
            other.children.push_back(std::move(lhs));
            pos = g + 1;
            int close = matching_paren(pos);
            if (close < 0) {
              fail();
              return {};
            }
            parse_args_into(other, close);
            if (failed) return {};
            other.kind = NodeKind::Other;
            other.last_tok = sig[close];
            pos = close + 1;
            lhs = std::move(other);
            continue;
          }
        }
        return lhs;
      }
      if (t->is_sep("(") && lhs.kind != NodeKind::Other) {
        // calls hang off names, field accesses and parenthesized expressions
        if (lhs.kind == NodeKind::Name || lhs.kind == NodeKind::FieldAccess ||
            lhs.kind == NodeKind::Paren) {
          lhs = finish_call(std::move(lhs));
          if (failed) return {};
          continue;
        }
        return lhs;
      }
      if (t->is_sep("[")) {
        int close = matching_bracket(pos);
        if (close < 0) return lhs;
        ExprNode idx;
        idx.kind = NodeKind::Index;
        idx.first_tok = lhs.first_tok;
        idx.last_tok = sig[close];
        if (close == pos + 1) {  // "[]": a type mention, not an index
          return lhs;
        }
        Parser sub{toks, sig, pos + 1, close, false};
        ExprNode inner = sub.parse_expr(0);
        if (sub.failed || sub.pos != close) {
          idx.kind = NodeKind::Other;
          idx.children.push_back(std::move(lhs));
        } else {
          idx.children.push_back(std::move(lhs));
          idx.children.push_back(std::move(inner));
        }
        pos = close + 1;
        lhs = std::move(idx);
        continue;
      }
      if (t->is_op("++") || t->is_op("--")) {
        ExprNode u;
        u.kind = NodeKind::Unary;
        u.op = t->text;
        u.postfix = true;
        u.first_tok = lhs.first_tok;
        u.last_tok = tok_index();
        u.op_tokens.push_back(tok_index());
        u.children.push_back(std::move(lhs));
        bump();
        lhs = std::move(u);
        continue;
      }
      if (t->is_op("::")) {
        const Token* m = peek(1);
        if (m && (m->cat == TokenCat::Identifier || m->is_kw("new"))) {
          ExprNode other;
          other.kind = NodeKind::Other;
          other.first_tok = lhs.first_tok;
          other.last_tok = tok_index(1);
          other.children.push_back(std::move(lhs));
          bump();
          bump();
          lhs = std::move(other);
          continue;
        }
        return lhs;
      }
      if (t->is_op("<") &&
          (lhs.kind == NodeKind::Name || lhs.kind == NodeKind::FieldAccess)) {
        // Possible generic type mention in expression position, plain or
        // qualified (e.g. "Map.Entry<K, V> e"). Only accepted when a type
        // can syntactically follow; otherwise '<' stays relational.
        int g = generics_scan(pos);
        if (g >= 0) {
          const Token* after = g < end ? &toks[sig[g]] : nullptr;
          if (after && (after->cat == TokenCat::Identifier || after->is_op("::") ||
                        after->is_sep("."))) {
            ExprNode other;
            other.kind = NodeKind::Other;
            other.first_tok = lhs.first_tok;
            other.last_tok = sig[g - 1];
            other.children.push_back(std::move(lhs));
            pos = g;
            lhs = std::move(other);
            continue;
          }
        }
        return lhs;
      }
      return lhs;
    }
  }

  ExprNode finish_call(ExprNode callee) {
    ExprNode call;
    call.kind = NodeKind::Call;
    call.first_tok = callee.first_tok;
    call.children.push_back(std::move(callee));
    int close = matching_paren(pos);
    if (close < 0) {
      fail();
      return {};
    }
    parse_args_into(call, close);
    if (failed) return {};
    call.last_tok = sig[close];
    pos = close + 1;
    return parse_postfix(std::move(call));
  }

  // --- infix -----------------------------------------------------------------

  ExprNode parse_expr(int min_bp) {
    ExprNode lhs = parse_prefix();
    if (failed) return {};
    for (;;) {
      const Token* t = peek();
      if (!t) return lhs;
      auto bind = infix_binding(*t);
      if (!bind || bind->lbp < min_bp) return lhs;
      if (t->is_op("?")) {
        int qtok = tok_index();
        bump();
        ExprNode then_e = parse_expr(0);
        if (failed) return {};
        if (at_end() || !peek()->is_op(":")) {
          fail();
          return {};
        }
        bump();  // ':'
        ExprNode else_e = parse_expr(bind->rbp);
        if (failed) return {};
        ExprNode tern;
        tern.kind = NodeKind::Other;
        tern.first_tok = lhs.first_tok;
        tern.last_tok = else_e.last_tok;
        tern.op_tokens.push_back(qtok);
        tern.children.push_back(std::move(lhs));
        tern.children.push_back(std::move(then_e));
        tern.children.push_back(std::move(else_e));
        lhs = std::move(tern);
        continue;
      }
      if (t->is_kw("instanceof")) {
        bump();
        int type_end = scan_type(pos);
        if (type_end < 0) {
          fail();
          return {};
        }
        ExprNode node;
        node.kind = NodeKind::Other;
        node.first_tok = lhs.first_tok;
        node.last_tok = sig[type_end - 1];
        node.children.push_back(std::move(lhs));
        pos = type_end;
        // optional pattern variable
        if (peek() && peek()->cat == TokenCat::Identifier) {
          node.last_tok = tok_index();
          bump();
        }
        lhs = std::move(node);
        continue;
      }
      std::string op_text = t->text;
      int op_tok = tok_index();
      bump();
      ExprNode rhs = parse_expr(bind->rbp);
      if (failed) return {};
      // left-leaning same-operator runs collapse into one chain node
      if (lhs.kind == NodeKind::Infix && lhs.op == op_text) {
        lhs.op_tokens.push_back(op_tok);
        lhs.last_tok = rhs.last_tok;
        lhs.children.push_back(std::move(rhs));
      } else {
        ExprNode node;
        node.kind = NodeKind::Infix;
        node.op = op_text;
        node.first_tok = lhs.first_tok;
        node.last_tok = rhs.last_tok;
        node.op_tokens.push_back(op_tok);
        node.children.push_back(std::move(lhs));
        node.children.push_back(std::move(rhs));
        lhs = std::move(node);
      }
    }
  }

  // Type reference after instanceof: dotted name or primitive, generics, [].
  // Returns the sig position just past the type, or -1.
  int scan_type(int p) const {
    if (p >= end) return -1;
    const Token& t0 = toks[sig[p]];
    if (is_primitive_type_kw(t0)) {
      ++p;
    } else if (t0.cat == TokenCat::Identifier) {
      ++p;
      while (p + 1 < end && toks[sig[p]].is_sep(".") &&
             toks[sig[p + 1]].cat == TokenCat::Identifier)
        p += 2;
      if (p < end && toks[sig[p]].is_op("<")) {
        int g = generics_scan(p);
        if (g < 0) return -1;
        p = g;
      }
    } else {
      return -1;
    }
    while (p + 1 < end && toks[sig[p]].is_sep("[") && toks[sig[p + 1]].is_sep("]"))
      p += 2;
    return p;
  }
};

bool can_anchor(const std::vector<Token>& toks, const std::vector<int>& sig, int p) {
  const Token& t = toks[sig[p]];
  if (t.cat == TokenCat::Identifier || t.is_literal()) return true;
  if (t.is_kw("this") || t.is_kw("super") || t.is_kw("new")) return true;
  if (t.is_op("!") || t.is_op("~") || t.is_op("++") || t.is_op("--") ||
      t.is_op("+") || t.is_op("-"))
    return true;
  if (t.is_sep("(")) {
    // condition parentheses belong to the statement, not the expression
    if (p > 0 && is_condition_keyword(toks[sig[p - 1]])) return false;
    return true;
  }
  return false;
}

// Position just past the '=' of a declarator head "Type name =" starting at
// p, or -1. A declarator is not an assignment expression, so sites begin at
// the initializer. "x = y" never matches: the name slot would hold the '='.
int decl_initializer_start(const std::vector<Token>& toks, const std::vector<int>& sig,
                           int p, int seg_end) {
  Parser scanner{toks, sig, p, seg_end, false};
  int at = scanner.scan_type(p);
  if (at < 0 || at + 1 >= seg_end) return -1;
  if (toks[sig[at]].cat != TokenCat::Identifier) return -1;
  if (!toks[sig[at + 1]].is_op("=")) return -1;
  return at + 2;
}

void collect_sites(const std::vector<Token>& toks, const std::vector<int>& sig,
                   int seg_begin, int seg_end, std::vector<ExprSite>& out) {
  int i = seg_begin;
  int pending_init = -1;  // sig position right after a declarator's '='
  while (i < seg_end) {
    int init = decl_initializer_start(toks, sig, i, seg_end);
    if (init >= 0) {
      pending_init = init;
      i = init;
      continue;
    }
    if (!can_anchor(toks, sig, i)) {
      ++i;
      continue;
    }
    Parser p{toks, sig, i, seg_end, false};
    ExprNode node = p.parse_expr(0);
    if (p.failed || p.pos == i) {
      ++i;
      continue;
    }
    ExprSite site;
    site.line_start = toks[node.first_tok].line;
    site.line_end = toks[node.last_tok].line;
    site.initializer = (i == pending_init);
    site.root = std::move(node);
    out.push_back(std::move(site));
    i = p.pos;
  }
}

}  // namespace

std::vector<ExprSite> parse_expressions(const std::vector<Token>& toks) {
  std::vector<int> sig;
  sig.reserve(toks.size());
  for (int i = 0; i < static_cast<int>(toks.size()); ++i)
    if (toks[i].significant()) sig.push_back(i);

  std::vector<ExprSite> sites;
  int seg_begin = 0;
  int paren_depth = 0;
  for (int i = 0; i < static_cast<int>(sig.size()); ++i) {
    const Token& t = toks[sig[i]];
    if (t.is_sep("(") || t.is_sep("[")) ++paren_depth;
    else if (t.is_sep(")") || t.is_sep("]")) paren_depth = std::max(0, paren_depth - 1);
    bool boundary = t.is_sep("{") || t.is_sep("}") ||
                    (t.is_sep(";") && paren_depth == 0);
    if (boundary) {
      collect_sites(toks, sig, seg_begin, i, sites);
      seg_begin = i + 1;
      paren_depth = 0;
    }
  }
  collect_sites(toks, sig, seg_begin, static_cast<int>(sig.size()), sites);
  return sites;
}

std::optional<SingleExpr> parse_single_expression(const std::string& text) {
  auto toks = tokenize(text);
  if (!toks) return std::nullopt;
  auto sites = parse_expressions(*toks);
  if (sites.size() != 1) return std::nullopt;
  // the parse must cover every significant token
  int first_sig = -1, last_sig = -1;
  for (int i = 0; i < static_cast<int>(toks->size()); ++i) {
    if ((*toks)[i].significant()) {
      if (first_sig < 0) first_sig = i;
      last_sig = i;
    }
  }
  if (sites[0].root.first_tok != first_sig || sites[0].root.last_tok != last_sig)
    return std::nullopt;
  SingleExpr out;
  out.toks = std::move(*toks);
  out.root = std::move(sites[0].root);
  return out;
}

// --- normalized comparison ---------------------------------------------------

namespace {

void frame_texts(const ExprNode& n, const std::vector<Token>& toks,
                 const std::map<int, std::string>* overrides,
                 std::vector<std::string>& out) {
  // significant tokens in the span not covered by any child
  size_t child = 0;
  std::vector<std::pair<int, int>> spans;
  for (const auto& c : n.children) spans.emplace_back(c.first_tok, c.last_tok);
  std::sort(spans.begin(), spans.end());
  for (int i = n.first_tok; i <= n.last_tok; ++i) {
    while (child < spans.size() && spans[child].second < i) ++child;
    if (child < spans.size() && spans[child].first <= i && i <= spans[child].second)
      continue;
    if (!toks[i].significant()) continue;
    if (overrides) {
      auto it = overrides->find(i);
      if (it != overrides->end()) {
        out.push_back(it->second);
        continue;
      }
    }
    out.push_back(toks[i].text);
  }
}

}  // namespace

NormNode normalize(const ExprNode& node, const std::vector<Token>& toks,
                   const std::map<int, std::string>* overrides) {
  if (node.kind == NodeKind::Paren && node.children.size() == 1)
    return normalize(node.children[0], toks, overrides);
  NormNode n;
  n.kind = node.kind;
  n.op = node.op;
  n.postfix = node.postfix;
  if (node.kind == NodeKind::Infix && !node.op_tokens.empty() && overrides) {
    auto it = overrides->find(node.op_tokens[0]);
    if (it != overrides->end()) n.op = it->second;
  }
  frame_texts(node, toks, overrides, n.frame);
  for (const auto& c : node.children) n.children.push_back(normalize(c, toks, overrides));
  if (n.kind == NodeKind::Infix && !n.children.empty() &&
      n.children[0].kind == NodeKind::Infix && n.children[0].op == n.op) {
    // (a + b) + c and a + b + c group identically under left association
    NormNode head = std::move(n.children[0]);
    std::vector<NormNode> merged(std::make_move_iterator(head.children.begin()),
                                 std::make_move_iterator(head.children.end()));
    for (size_t i = 1; i < n.children.size(); ++i)
      merged.push_back(std::move(n.children[i]));
    n.children = std::move(merged);
    std::vector<std::string> frame = std::move(head.frame);
    for (auto& f : n.frame) frame.push_back(std::move(f));
    n.frame = std::move(frame);
  }
  return n;
}

bool norm_equal(const NormNode& a, const NormNode& b) {
  if (a.kind != b.kind || a.op != b.op || a.postfix != b.postfix) return false;
  if (a.frame != b.frame) return false;
  if (a.children.size() != b.children.size()) return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!norm_equal(a.children[i], b.children[i])) return false;
  return true;
}

// --- typing --------------------------------------------------------------------

TypeTag type_tag_for_declared(const std::string& declared_type) {
  if (declared_type == "int") return TypeTag::Int;
  if (declared_type == "long") return TypeTag::Long;
  if (declared_type == "float") return TypeTag::Float;
  if (declared_type == "double") return TypeTag::Double;
  if (declared_type == "boolean") return TypeTag::Boolean;
  if (declared_type == "String") return TypeTag::String;
  return TypeTag::Unknown;
}

namespace {

bool numeric(TypeTag t) {
  return t == TypeTag::Int || t == TypeTag::Long || t == TypeTag::Float ||
         t == TypeTag::Double;
}

TypeTag numeric_join(TypeTag a, TypeTag b) {
  if (a == TypeTag::Double || b == TypeTag::Double) return TypeTag::Double;
  if (a == TypeTag::Float || b == TypeTag::Float) return TypeTag::Float;
  if (a == TypeTag::Long || b == TypeTag::Long) return TypeTag::Long;
  return TypeTag::Int;
}

bool assignment_op(const std::string& o) {
  return o == "=" || o == "+=" || o == "-=" || o == "*=" || o == "/=" ||
         o == "%=" || o == "&=" || o == "|=" || o == "^=" || o == "<<=" ||
         o == ">>=" || o == ">>>=";
}

}  // namespace

TypeTag type_of(const ExprNode& node, const std::vector<Token>& toks,
                const std::map<std::string, TypeTag>& locals) {
  switch (node.kind) {
    case NodeKind::Literal: {
      const Token& t = toks[node.first_tok];
      switch (t.cat) {
        case TokenCat::IntLit: {
          char last = t.text.empty() ? '\0' : t.text.back();
          return (last == 'l' || last == 'L') ? TypeTag::Long : TypeTag::Int;
        }
        case TokenCat::FloatLit: {
          char last = t.text.empty() ? '\0' : t.text.back();
          return (last == 'f' || last == 'F') ? TypeTag::Float : TypeTag::Double;
        }
        case TokenCat::StringLit: return TypeTag::String;
        case TokenCat::BoolLit: return TypeTag::Boolean;
        default: return TypeTag::Unknown;  // char and null literals
      }
    }
    case NodeKind::Name: {
      auto it = locals.find(node.op);
      return it == locals.end() ? TypeTag::Unknown : it->second;
    }
    case NodeKind::Paren:
      return node.children.size() == 1 ? type_of(node.children[0], toks, locals)
                                       : TypeTag::Unknown;
    case NodeKind::Unary: {
      if (node.children.size() != 1) return TypeTag::Unknown;
      TypeTag c = type_of(node.children[0], toks, locals);
      if (node.op == "!") return TypeTag::Boolean;
      if (node.op == "~")
        return (c == TypeTag::Int || c == TypeTag::Long) ? c : TypeTag::Unknown;
      return numeric(c) ? c : TypeTag::Unknown;
    }
    case NodeKind::Infix: {
      const std::string& o = node.op;
      if (o == "<" || o == "<=" || o == ">" || o == ">=" || o == "==" ||
          o == "!=" || o == "&&" || o == "||")
        return TypeTag::Boolean;
      if (assignment_op(o)) return TypeTag::Unknown;
      std::vector<TypeTag> ct;
      for (const auto& c : node.children) ct.push_back(type_of(c, toks, locals));
      if (o == "+") {
        for (TypeTag t : ct)
          if (t == TypeTag::String) return TypeTag::String;
      }
      if (o == "<<" || o == ">>" || o == ">>>") {
        if (!ct.empty() && (ct[0] == TypeTag::Int || ct[0] == TypeTag::Long)) return ct[0];
        return TypeTag::Unknown;
      }
      if (o == "&" || o == "|" || o == "^") {
        bool all_bool = true, all_num = true;
        for (TypeTag t : ct) {
          all_bool = all_bool && t == TypeTag::Boolean;
          all_num = all_num && numeric(t);
        }
        if (all_bool) return TypeTag::Boolean;
        if (!all_num) return TypeTag::Unknown;
      }
      if (o == "+" || o == "-" || o == "*" || o == "/" || o == "%" || o == "&" ||
          o == "|" || o == "^") {
        TypeTag acc = TypeTag::Int;
        for (TypeTag t : ct) {
          if (!numeric(t)) return TypeTag::Unknown;
          acc = numeric_join(acc, t);
        }
        return acc;
      }
      return TypeTag::Unknown;
    }
    case NodeKind::Cast:
    case NodeKind::Call:
    case NodeKind::Index:
    case NodeKind::FieldAccess:
    case NodeKind::Other:
      return TypeTag::Unknown;
  }
  return TypeTag::Unknown;
}

bool has_call_or_side_effect(const ExprNode& node) {
  if (node.kind == NodeKind::Call || node.kind == NodeKind::Other) return true;
  if (node.kind == NodeKind::Unary && (node.op == "++" || node.op == "--")) return true;
  if (node.kind == NodeKind::Infix && assignment_op(node.op)) return true;
  for (const auto& c : node.children)
    if (has_call_or_side_effect(c)) return true;
  return false;
}

int count_significant(const ExprNode& node, const std::vector<Token>& toks) {
  int n = 0;
  for (int i = node.first_tok; i <= node.last_tok; ++i)
    if (toks[i].significant()) ++n;
  return n;
}

namespace {

void dump_node(const ExprNode& n, const std::vector<Token>& toks, int depth,
               std::ostringstream& out) {
  out << std::string(static_cast<size_t>(depth) * 2, ' ') << node_kind_name(n.kind);
  if (!n.op.empty()) out << " op=" << n.op;
  if (n.postfix) out << " postfix";
  std::string text = render_tokens(toks, n.first_tok, n.last_tok);
  if (text.size() > 60) text = text.substr(0, 57) + "...";
  for (char& c : text)
    if (c == '\n' || c == '\t') c = ' ';
  out << " `" << text << "`\n";
  for (const auto& c : n.children) dump_node(c, toks, depth + 1, out);
}

}  // namespace

std::string dump_sites(const std::vector<Token>& toks, const std::vector<ExprSite>& sites) {
  std::ostringstream out;
  for (size_t i = 0; i < sites.size(); ++i) {
    out << "site " << i << " lines " << sites[i].line_start << ".." << sites[i].line_end
        << "\n";
    dump_node(sites[i].root, toks, 1, out);
  }
  return out.str();
}

}  // namespace natex::frontend
