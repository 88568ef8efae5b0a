#include "natex/methods.hpp"

#include <algorithm>
#include <unordered_map>

namespace natex::frontend {

namespace {

bool is_primitive_type_kw(const Token& t) {
  if (t.cat != TokenCat::Keyword) return false;
  const std::string& s = t.text;
  return s == "int" || s == "long" || s == "float" || s == "double" ||
         s == "boolean" || s == "byte" || s == "short" || s == "char";
}

// Same strict scan as the expression parser uses; duplicated here because the
// two walks run over different index spaces.
int generics_scan(const std::vector<Token>& toks, const std::vector<int>& sig, int p,
                  int end) {
  if (p >= end || !toks[sig[p]].is_op("<")) return -1;
  int depth = 0;
  for (int i = p; i < end; ++i) {
    const Token& t = toks[sig[i]];
    if (t.is_op("<")) ++depth;
    else if (t.is_op(">")) --depth;
    else if (t.is_op(">>")) depth -= 2;
    else if (t.is_op(">>>")) depth -= 3;
    else if (t.cat == TokenCat::Identifier || t.is_sep(".") || t.is_sep(",") ||
             t.is_op("?") || t.is_op("&") || t.is_sep("[") || t.is_sep("]") ||
             t.is_kw("extends") || t.is_kw("super") || is_primitive_type_kw(t)) {
      // fine
    } else {
      return -1;
    }
    if (depth == 0) return i + 1;
    if (depth < 0) return -1;
  }
  return -1;
}

// Scans a declarable type at sig position p: primitive keyword or a single
// identifier (optionally generic), plus array brackets. Returns the position
// just past the type, or -1. Dotted types are deliberately not accepted.
int scan_decl_type(const std::vector<Token>& toks, const std::vector<int>& sig, int p,
                   int end, std::string* text_out) {
  if (p >= end) return -1;
  const Token& t0 = toks[sig[p]];
  int i = p;
  if (is_primitive_type_kw(t0)) {
    ++i;
  } else if (t0.cat == TokenCat::Identifier) {
    ++i;
    if (i < end && toks[sig[i]].is_op("<")) {
      int g = generics_scan(toks, sig, i, end);
      if (g < 0) return -1;
      i = g;
    }
  } else {
    return -1;
  }
  while (i + 1 < end && toks[sig[i]].is_sep("[") && toks[sig[i + 1]].is_sep("]")) i += 2;
  if (text_out) {
    text_out->clear();
    for (int k = p; k < i; ++k) *text_out += toks[sig[k]].text;
  }
  return i;
}

bool is_modifier_kw(const Token& t) {
  if (t.cat != TokenCat::Keyword) return false;
  const std::string& s = t.text;
  return s == "public" || s == "private" || s == "protected" || s == "static" ||
         s == "final" || s == "abstract" || s == "synchronized" || s == "native" ||
         s == "strictfp" || s == "transient" || s == "volatile";
}

}  // namespace

std::vector<MethodScope> analyze_methods(const std::vector<Token>& toks) {
  std::vector<int> sig;
  for (int i = 0; i < static_cast<int>(toks.size()); ++i)
    if (toks[i].significant()) sig.push_back(i);
  int n = static_cast<int>(sig.size());

  auto match_close_brace = [&](int open) {
    int depth = 0;
    for (int i = open; i < n; ++i) {
      if (toks[sig[i]].is_sep("{")) ++depth;
      else if (toks[sig[i]].is_sep("}")) {
        --depth;
        if (depth == 0) return i;
      }
    }
    return -1;
  };
  auto match_open_paren_back = [&](int close) {
    int depth = 0;
    for (int i = close; i >= 0; --i) {
      if (toks[sig[i]].is_sep(")")) ++depth;
      else if (toks[sig[i]].is_sep("(")) {
        --depth;
        if (depth == 0) return i;
      }
    }
    return -1;
  };

  std::vector<MethodScope> methods;
  for (int i = 0; i < n; ++i) {
    if (!toks[sig[i]].is_sep("{")) continue;
    // Walk back over an optional throws clause to the parameter list.
    int j = i - 1;
    bool saw_throws_walk = false;
    while (j >= 0) {
      const Token& t = toks[sig[j]];
      if (t.cat == TokenCat::Identifier || t.is_sep(".") || t.is_sep(",")) {
        saw_throws_walk = true;
        --j;
        continue;
      }
      break;
    }
    if (saw_throws_walk) {
      if (j < 0 || !toks[sig[j]].is_kw("throws")) continue;
      --j;
    }
    if (j < 0 || !toks[sig[j]].is_sep(")")) continue;
    int open_paren = match_open_paren_back(j);
    if (open_paren <= 0) continue;
    const Token& name_tok = toks[sig[open_paren - 1]];
    if (name_tok.cat != TokenCat::Identifier) continue;
    // Reject constructs that merely look like headers: calls after `new`,
    // method references, qualified calls.
    if (open_paren >= 2) {
      const Token& before = toks[sig[open_paren - 2]];
      if (before.is_kw("new") || before.is_sep(".") || before.is_op("::")) continue;
      // `foo(...)` as a statement (a call followed by a block is not Java,
      // but annotations like @Foo(...) would otherwise slip through)
      if (before.is_sep("@")) continue;
      bool plausible = before.cat == TokenCat::Identifier || is_modifier_kw(before) ||
                       is_primitive_type_kw(before) || before.is_kw("void") ||
                       before.is_sep("]") || before.is_op(">") || before.is_sep(";") ||
                       before.is_sep("{") || before.is_sep("}");
      if (!plausible) continue;
    }
    int close = match_close_brace(i);
    if (close < 0) continue;

    MethodScope m;
    m.name = name_tok.text;
    m.body_open_tok = sig[i];
    m.body_close_tok = sig[close];

    // --- parameters -----------------------------------------------------------
    // On the first construct the scanner cannot read (dotted types, receiver
    // parameters) the rest of the list is abandoned; everything parsed so far
    // is still sound, the remainder just stays untyped.
    for (int p = open_paren + 1; p < j;) {
      const Token& t = toks[sig[p]];
      if (t.is_kw("final")) {
        ++p;
        continue;
      }
      if (t.is_sep("@") && p + 1 < j) {  // annotation, optionally with arguments
        p += 2;
        if (p < j && toks[sig[p]].is_sep("(")) {
          int depth = 0;
          while (p < j) {
            if (toks[sig[p]].is_sep("(")) ++depth;
            else if (toks[sig[p]].is_sep(")") && --depth == 0) {
              ++p;
              break;
            }
            ++p;
          }
        }
        continue;
      }
      std::string type_text;
      int after_type = scan_decl_type(toks, sig, p, j, &type_text);
      if (after_type < 0 || after_type >= j) break;
      if (toks[sig[after_type]].is_sep("...")) {
        type_text += "[]";
        ++after_type;
        if (after_type >= j) break;
      }
      if (toks[sig[after_type]].cat != TokenCat::Identifier) break;
      VarDecl v;
      v.name = toks[sig[after_type]].text;
      v.declared_type = type_text;
      v.decl_count_in_method = 1;
      v.decl_tok = sig[after_type];
      p = after_type + 1;
      while (p + 1 < j && toks[sig[p]].is_sep("[") && toks[sig[p + 1]].is_sep("]")) {
        v.declared_type += "[]";  // C-style brackets after the name
        p += 2;
      }
      m.params.push_back(std::move(v));
      if (p < j) {
        if (!toks[sig[p]].is_sep(",")) break;
        ++p;
      }
    }

    // --- declarations -------------------------------------------------------
    std::unordered_map<std::string, int> decl_index;  // name -> locals slot
    std::unordered_map<std::string, int> decl_count;
    int body_b = i + 1, body_e = close;
    for (int p = body_b; p < body_e; ++p) {
      const Token& t = toks[sig[p]];
      if (t.is_op("->") || t.is_op("::")) m.contains_lambda = true;
      bool ctx_ok = false;
      if (p == body_b) {
        ctx_ok = true;
      } else {
        const Token& prev = toks[sig[p - 1]];
        ctx_ok = prev.is_sep(";") || prev.is_sep("{") || prev.is_sep("}") ||
                 prev.is_sep("(") || prev.is_kw("final") || prev.is_kw("instanceof");
      }
      if (!ctx_ok) continue;
      if (!(toks[sig[p]].cat == TokenCat::Identifier || is_primitive_type_kw(toks[sig[p]])))
        continue;
      std::string type_text;
      int after_type = scan_decl_type(toks, sig, p, body_e, &type_text);
      if (after_type < 0 || after_type >= body_e) continue;
      if (toks[sig[after_type]].cat != TokenCat::Identifier) continue;

      // declarator list: name (= expr)? (, name (= expr)?)* terminated by
      // ';' / ':' / ')' at depth zero
      int q = after_type;
      while (q < body_e && toks[sig[q]].cat == TokenCat::Identifier) {
        int name_pos = q;
        const Token& nt = toks[sig[q]];
        ++q;
        if (q >= body_e) break;
        const Token& term = toks[sig[q]];
        bool valid_decl = term.is_op("=") || term.is_sep(";") || term.is_sep(",") ||
                          term.is_op(":") || term.is_sep(")");
        if (!valid_decl) break;
        ++decl_count[nt.text];
        auto it = decl_index.find(nt.text);
        if (it == decl_index.end()) {
          VarDecl v;
          v.name = nt.text;
          v.declared_type = type_text;
          v.decl_tok = sig[name_pos];
          decl_index[nt.text] = static_cast<int>(m.locals.size());
          m.locals.push_back(std::move(v));
        }
        if (term.is_op("=")) {
          // skip the initializer to a ',' or ';' at depth zero
          int depth = 0;
          ++q;
          while (q < body_e) {
            const Token& s = toks[sig[q]];
            if (s.is_sep("(") || s.is_sep("[") || s.is_sep("{")) ++depth;
            else if (s.is_sep(")") || s.is_sep("]") || s.is_sep("}")) {
              if (depth == 0) break;  // end of an enclosing group, e.g. for(...)
              --depth;
            } else if (depth == 0 && (s.is_sep(";") || s.is_sep(","))) {
              break;
            }
            ++q;
          }
        }
        if (q < body_e && toks[sig[q]].is_sep(",")) {
          ++q;
          continue;
        }
        break;
      }
    }

    // --- occurrences ---------------------------------------------------------
    for (int p = body_b; p < body_e; ++p) {
      const Token& t = toks[sig[p]];
      if (t.cat != TokenCat::Identifier) continue;
      auto it = decl_index.find(t.text);
      if (it == decl_index.end()) continue;
      if (p > 0) {
        const Token& prev = toks[sig[p - 1]];
        if (prev.is_sep(".")) continue;                       // member access
        if (prev.is_kw("break") || prev.is_kw("continue")) continue;  // label ref
        if (prev.is_kw("case")) continue;                      // constant label
        bool stmt_start = prev.is_sep(";") || prev.is_sep("{") || prev.is_sep("}");
        if (stmt_start && p + 1 < body_e && toks[sig[p + 1]].is_op(":"))
          continue;  // label definition
      }
      if (p + 1 < body_e && toks[sig[p + 1]].is_sep("(")) continue;  // method name
      VarDecl& v = m.locals[static_cast<size_t>(it->second)];
      v.positions.push_back(sig[p]);
      if (sig[p] < v.decl_tok) v.use_before_decl = true;
    }
    for (auto& v : m.locals) v.decl_count_in_method = decl_count[v.name];
    methods.push_back(std::move(m));
  }
  return methods;
}

std::map<std::string, TypeTag> local_types(const MethodScope& m) {
  std::map<std::string, TypeTag> out;
  for (const auto& v : m.locals)
    if (v.decl_count_in_method == 1)
      out[v.name] = type_tag_for_declared(v.declared_type);
  return out;
}

std::map<std::string, TypeTag> scope_types(const MethodScope& m) {
  std::map<std::string, TypeTag> out;
  for (const auto& v : m.params) out[v.name] = type_tag_for_declared(v.declared_type);
  for (const auto& v : m.locals) {
    if (v.decl_count_in_method == 1) out[v.name] = type_tag_for_declared(v.declared_type);
    else out.erase(v.name);  // ambiguous redeclaration: drop any parameter typing too
  }
  return out;
}

const MethodScope* enclosing_method(const std::vector<MethodScope>& methods,
                                    int tok_index) {
  const MethodScope* best = nullptr;
  for (const auto& m : methods) {
    if (!m.covers(tok_index)) continue;
    if (!best || m.body_open_tok > best->body_open_tok) best = &m;  // innermost
  }
  return best;
}

}  // namespace natex::frontend
