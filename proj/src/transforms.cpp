#include "natex/transforms.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "natex/lexer.hpp"
#include "natex/methods.hpp"
#include "natex/ngram.hpp"
#include "natex/parser.hpp"
#include "natex/util.hpp"

namespace natex::transforms {

namespace {

using frontend::ExprNode;
using frontend::ExprSite;
using frontend::MethodScope;
using frontend::NodeKind;
using frontend::Token;
using frontend::TypeTag;

size_t tok_end(const Token& t) { return t.offset + t.text.size(); }

std::string span_text(const std::string& content, const std::vector<Token>& toks,
                      int first, int last) {
  size_t b = toks[static_cast<size_t>(first)].offset;
  size_t e = tok_end(toks[static_cast<size_t>(last)]);
  return content.substr(b, e - b);
}

bool is_assignment_op(const std::string& op) {
  static const std::set<std::string> kAssign = {
      "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="};
  return kAssign.count(op) > 0;
}

bool is_relational(const std::string& op) {
  return op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" ||
         op == ">=";
}

std::string mirror_rel(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  return op;  // == and != are symmetric
}

bool numeric_tag(TypeTag t) {
  return t == TypeTag::Int || t == TypeTag::Long || t == TypeTag::Float ||
         t == TypeTag::Double;
}

bool integral_tag(TypeTag t) { return t == TypeTag::Int || t == TypeTag::Long; }

ExprNode* node_at(ExprNode& root, const std::vector<int>& path) {
  ExprNode* n = &root;
  for (int i : path) n = &n->children[static_cast<size_t>(i)];
  return n;
}

const ExprNode* node_at(const ExprNode& root, const std::vector<int>& path) {
  const ExprNode* n = &root;
  for (int i : path) n = &n->children[static_cast<size_t>(i)];
  return n;
}

void walk_nodes(const ExprNode& node, const ExprNode* parent, std::vector<int>& path,
                const std::function<void(const ExprNode&, const ExprNode*,
                                         const std::vector<int>&)>& fn) {
  fn(node, parent, path);
  for (size_t i = 0; i < node.children.size(); ++i) {
    path.push_back(static_cast<int>(i));
    walk_nodes(node.children[i], &node, path, fn);
    path.pop_back();
  }
}

std::string node_label(const ExprNode& n) {
  if ((n.kind == NodeKind::Infix || n.kind == NodeKind::Unary) && !n.op.empty())
    return n.op;
  return frontend::node_kind_name(n.kind);
}

// One prospective edit location inside a site.
struct Candidate {
  std::vector<int> path;               // edited node
  int position = 0;                    // operator occurrence for swaps (1-based gap)
  std::vector<std::vector<int>> wrap;  // paren_add targets (usually one)
};

std::vector<std::string> sorted_multiset(const std::vector<Token>& toks, int first,
                                         int last) {
  std::vector<std::string> out;
  for (int i = first; i <= last; ++i)
    if (toks[static_cast<size_t>(i)].significant())
      out.push_back(toks[static_cast<size_t>(i)].text);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> multiset_intersection(std::vector<std::string> a,
                                               std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

std::string abstracted_form(const std::vector<Token>& toks, const ExprNode& n) {
  const ExprNode* eff = &n;
  while (eff->kind == NodeKind::Paren && eff->children.size() == 1)
    eff = &eff->children[0];
  std::string out;
  for (int i = eff->first_tok; i <= eff->last_tok; ++i) {
    const Token& t = toks[static_cast<size_t>(i)];
    if (!t.significant()) continue;
    out += lm::abstract_token(t.cat, t.text);
    out += '\x1f';
  }
  return out;
}

bool any_line_excluded(const std::vector<bool>& excluded, int first_line,
                       int last_line) {
  if (excluded.empty()) return false;
  for (int l = first_line; l <= last_line; ++l)
    if (l >= 0 && static_cast<size_t>(l) < excluded.size() && excluded[static_cast<size_t>(l)])
      return true;
  return false;
}

bool line_excluded(const std::vector<bool>& excluded, int line) {
  return !excluded.empty() && line >= 0 &&
         static_cast<size_t>(line) < excluded.size() && excluded[static_cast<size_t>(line)];
}

// ---------------------------------------------------------------------------
// expression kinds

std::vector<Candidate> enumerate_candidates(Kind kind, const ExprSite& site,
                                            const std::vector<Token>& toks,
                                            const std::map<std::string, TypeTag>& locals) {
  std::vector<Candidate> out;
  std::set<std::vector<int>> consumed;  // operands folded into a symmetric wrap
  std::vector<int> path;
  walk_nodes(site.root, nullptr, path, [&](const ExprNode& n, const ExprNode* parent,
                                           const std::vector<int>& p) {
    switch (kind) {
      case Kind::ArithSwap: {
        if (n.kind != NodeKind::Infix || (n.op != "+" && n.op != "*")) return;
        if (frontend::has_call_or_side_effect(n)) return;
        bool all_numeric = true, all_integral = true;
        for (const auto& c : n.children) {
          TypeTag t = frontend::type_of(c, toks, locals);
          all_numeric = all_numeric && numeric_tag(t);
          all_integral = all_integral && integral_tag(t);
        }
        if (!all_numeric) return;
        if (n.children.size() > 2 && !all_integral) return;
        for (int pos = 1; pos < static_cast<int>(n.children.size()); ++pos)
          out.push_back({p, pos, {}});
        return;
      }
      case Kind::RelSwap: {
        if (n.kind != NodeKind::Infix || !is_relational(n.op)) return;
        if (n.children.size() != 2) return;
        if (frontend::has_call_or_side_effect(n.children[0])) return;
        if (frontend::has_call_or_side_effect(n.children[1])) return;
        out.push_back({p, 1, {}});
        return;
      }
      case Kind::ParenAdd: {
        // a chain of structurally identical boolean arms is wrapped as one
        // candidate covering every bare arm, never one arm alone
        if (n.kind == NodeKind::Infix && (n.op == "&&" || n.op == "||") &&
            n.children.size() >= 2) {
          std::string form = abstracted_form(toks, n.children[0]);
          bool symmetric = !form.empty();
          for (size_t i = 1; i < n.children.size() && symmetric; ++i)
            symmetric = abstracted_form(toks, n.children[i]) == form;
          if (symmetric) {
            Candidate c{p, 0, {}};
            for (size_t i = 0; i < n.children.size(); ++i) {
              std::vector<int> cp = p;
              cp.push_back(static_cast<int>(i));
              consumed.insert(cp);
              if (n.children[i].kind != NodeKind::Paren) c.wrap.push_back(cp);
            }
            if (!c.wrap.empty()) out.push_back(std::move(c));
          }
        }
        if (!parent) {
          // wrapping the entire expression is valid Java only where the
          // statement grammar allows a parenthesized form, i.e. initializers
          if (site.initializer && n.kind != NodeKind::Paren && n.children.size() > 0)
            out.push_back({p, 0, {p}});
          return;
        }
        if (consumed.count(p)) return;
        if (n.kind == NodeKind::Paren || parent->kind == NodeKind::Paren) return;
        int idx = p.back();
        bool ok = false;
        switch (parent->kind) {
          case NodeKind::Infix:
            ok = !(is_assignment_op(parent->op) && idx == 0);
            break;
          case NodeKind::Unary:
            ok = true;
            break;
          case NodeKind::Call:
            ok = idx >= 1;  // arguments only; a wrapped callee is not valid syntax
            break;
          case NodeKind::Index:
          case NodeKind::Cast:
            ok = true;
            break;
          default:
            ok = false;  // field access bases and opaque regions stay untouched
        }
        if (ok) out.push_back({p, 0, {p}});
        return;
      }
      case Kind::ParenRemove: {
        if (n.kind != NodeKind::Paren || n.children.size() != 1) return;
        out.push_back({p, 0, {}});
        return;
      }
      default:
        return;
    }
  });
  return out;
}

struct BuiltVariant {
  TransformRecord rec;
  std::vector<int> order_key;  // path for stable output ordering
};

// Validates by re-lexing and re-parsing the transformed expression text and
// comparing parenthesis-erased trees against the intended edit.
bool validate_expression_edit(Kind kind, const ExprSite& site,
                              const std::vector<Token>& toks, const Candidate& cand,
                              const std::string& transformed_region) {
  auto reparsed = frontend::parse_single_expression(transformed_region);
  if (!reparsed) return false;
  int orig_n = frontend::count_significant(site.root, toks);
  int got_n = 0;
  for (const auto& t : reparsed->toks)
    if (t.significant()) ++got_n;
  int want_n = orig_n;
  if (kind == Kind::ParenAdd) want_n = orig_n + 2 * static_cast<int>(cand.wrap.size());
  if (kind == Kind::ParenRemove) want_n = orig_n - 2;
  if (got_n != want_n) return false;

  frontend::NormNode got = frontend::normalize(reparsed->root, reparsed->toks);
  frontend::NormNode want;
  if (kind == Kind::ArithSwap || kind == Kind::RelSwap) {
    ExprNode copy = site.root;
    ExprNode* n = node_at(copy, cand.path);
    std::swap(n->children[static_cast<size_t>(cand.position - 1)],
              n->children[static_cast<size_t>(cand.position)]);
    std::map<int, std::string> overrides;
    if (kind == Kind::RelSwap) {
      std::string mirrored = mirror_rel(n->op);
      if (mirrored != n->op) {
        overrides[n->op_tokens[0]] = mirrored;
        n->op = mirrored;
      }
    }
    want = frontend::normalize(copy, toks, overrides.empty() ? nullptr : &overrides);
  } else {
    want = frontend::normalize(site.root, toks);
  }
  return frontend::norm_equal(got, want);
}

std::optional<BuiltVariant> build_expression_variant(
    Kind kind, const std::string& path, const std::string& content,
    const ExprSite& site, const std::vector<Token>& toks, const Candidate& cand) {
  size_t rb = toks[static_cast<size_t>(site.root.first_tok)].offset;
  size_t re = tok_end(toks[static_cast<size_t>(site.root.last_tok)]);

  std::vector<Edit> edits;
  const ExprNode* n = node_at(site.root, cand.path);
  if (kind == Kind::ArithSwap || kind == Kind::RelSwap) {
    const ExprNode& a = n->children[static_cast<size_t>(cand.position - 1)];
    const ExprNode& b = n->children[static_cast<size_t>(cand.position)];
    std::string a_text = span_text(content, toks, a.first_tok, a.last_tok);
    std::string b_text = span_text(content, toks, b.first_tok, b.last_tok);
    edits.push_back({toks[static_cast<size_t>(a.first_tok)].offset,
                     tok_end(toks[static_cast<size_t>(a.last_tok)]), b_text});
    if (kind == Kind::RelSwap) {
      std::string mirrored = mirror_rel(n->op);
      if (mirrored != n->op) {
        const Token& op_tok = toks[static_cast<size_t>(n->op_tokens[0])];
        edits.push_back({op_tok.offset, tok_end(op_tok), mirrored});
      }
    }
    edits.push_back({toks[static_cast<size_t>(b.first_tok)].offset,
                     tok_end(toks[static_cast<size_t>(b.last_tok)]), a_text});
  } else if (kind == Kind::ParenAdd) {
    for (const auto& wp : cand.wrap) {
      const ExprNode* w = node_at(site.root, wp);
      size_t b = toks[static_cast<size_t>(w->first_tok)].offset;
      size_t e = tok_end(toks[static_cast<size_t>(w->last_tok)]);
      edits.push_back({b, b, "("});
      edits.push_back({e, e, ")"});
    }
  } else {  // ParenRemove
    const Token& open = toks[static_cast<size_t>(n->first_tok)];
    const Token& close = toks[static_cast<size_t>(n->last_tok)];
    edits.push_back({open.offset, tok_end(open), ""});
    edits.push_back({close.offset, tok_end(close), ""});
  }
  std::sort(edits.begin(), edits.end(),
            [](const Edit& x, const Edit& y) { return x.begin < y.begin; });

  std::vector<Edit> local = edits;
  for (auto& e : local) {
    e.begin -= rb;
    e.end -= rb;
  }
  std::string original_text = content.substr(rb, re - rb);
  std::string transformed_text = apply_edits(original_text, local);
  if (transformed_text == original_text) return std::nullopt;
  if (!validate_expression_edit(kind, site, toks, cand, transformed_text))
    return std::nullopt;

  TransformRecord rec;
  rec.kind = kind;
  rec.file = path;
  rec.edits = std::move(edits);
  for (int l = site.line_start; l <= site.line_end; ++l) rec.lines.push_back(l);
  rec.region_begin = rb;
  rec.region_end = re;
  rec.original_text = std::move(original_text);
  rec.transformed_text = transformed_text;
  rec.num_tokens = frontend::count_significant(site.root, toks);

  const ExprNode* target = n;
  std::vector<int> target_path = cand.path;
  if (kind == Kind::ParenAdd) {
    target_path = cand.wrap.front();
    target = node_at(site.root, target_path);
  }
  const ExprNode* parent =
      target_path.empty()
          ? nullptr
          : node_at(site.root, {target_path.begin(), target_path.end() - 1});
  rec.parent_kind = parent ? frontend::node_kind_name(parent->kind) : "root";
  if (kind == Kind::ArithSwap || kind == Kind::RelSwap) {
    rec.dominant_op = n->op;
  } else if (kind == Kind::ParenAdd) {
    rec.dominant_op = node_label(*target);
  } else {
    rec.dominant_op = node_label(n->children[0]);
  }

  auto trans_lexed = frontend::tokenize(transformed_text);
  std::vector<std::string> trans_tokens;
  if (trans_lexed)
    for (const auto& t : *trans_lexed)
      if (t.significant()) trans_tokens.push_back(t.text);
  rec.shared_tokens = multiset_intersection(
      sorted_multiset(toks, site.root.first_tok, site.root.last_tok), trans_tokens);

  std::vector<int> key = cand.path;
  key.push_back(cand.position);
  return BuiltVariant{std::move(rec), std::move(key)};
}

// ---------------------------------------------------------------------------
// shuffle kinds

std::vector<size_t> line_starts(const std::string& content) {
  std::vector<size_t> starts{0};
  for (size_t i = 0; i < content.size(); ++i)
    if (content[i] == '\n') starts.push_back(i + 1);
  return starts;
}

std::string join_lines(const std::string& content, const std::vector<size_t>& starts,
                       const std::vector<int>& lines) {
  std::string out;
  for (int ln : lines) {
    size_t b = starts[static_cast<size_t>(ln - 1)];
    size_t e = static_cast<size_t>(ln) < starts.size() ? starts[static_cast<size_t>(ln)]
                                                       : content.size();
    while (e > b && (content[e - 1] == '\n' || content[e - 1] == '\r')) --e;
    if (!out.empty()) out += '\n';
    out += content.substr(b, e - b);
  }
  return out;
}

// Permutes group indices until nothing maps to itself.
std::vector<size_t> derangement(util::Rng& rng, size_t n) {
  std::vector<size_t> perm(n);
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    bool fixed = false;
    for (size_t i = 0; i < n; ++i) fixed = fixed || perm[i] == i;
    if (!fixed) return perm;
  }
  return {};  // statistically unreachable for n >= 2
}

// The rename is accepted only if re-analyzing the transformed file finds the
// same method with every affected name's occurrence list carried over intact
// under the permutation (token indices are stable: edits are one-for-one).
bool validate_shuffle(const std::string& content, const std::vector<Edit>& edits,
                      const std::vector<MethodScope>& methods, size_t method_index,
                      const std::map<std::string, std::string>& renames) {
  std::string t_content = apply_edits(content, edits);
  auto t_toks = frontend::tokenize(t_content);
  if (!t_toks) return false;
  auto t_methods = frontend::analyze_methods(*t_toks);
  if (t_methods.size() != methods.size()) return false;
  const MethodScope& before = methods[method_index];
  const MethodScope& after = t_methods[method_index];
  if (after.name != before.name) return false;
  if (after.body_open_tok != before.body_open_tok ||
      after.body_close_tok != before.body_close_tok)
    return false;
  std::map<std::string, const frontend::VarDecl*> after_by_name;
  for (const auto& v : after.locals) after_by_name[v.name] = &v;
  for (const auto& v : before.locals) {
    auto rn = renames.find(v.name);
    std::string expect = rn == renames.end() ? v.name : rn->second;
    auto it = after_by_name.find(expect);
    if (it == after_by_name.end()) return false;
    if (it->second->decl_count_in_method != v.decl_count_in_method) return false;
    if (it->second->positions != v.positions) return false;
  }
  return true;
}

std::vector<TransformRecord> shuffle_transforms(const std::string& path,
                                                const std::string& content, Kind kind,
                                                const std::vector<bool>& excluded,
                                                uint64_t seed, FindStats* stats) {
  std::vector<TransformRecord> out;
  auto toks_opt = frontend::tokenize(content);
  if (!toks_opt) return out;
  const auto& toks = *toks_opt;
  auto methods = frontend::analyze_methods(toks);
  auto starts = line_starts(content);

  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const MethodScope& m = methods[mi];
    if (m.name == "equals" || m.name == "hashCode") continue;
    if (m.contains_lambda) continue;
    std::vector<const frontend::VarDecl*> eligible;
    for (const auto& v : m.locals)
      if (v.decl_count_in_method == 1 && !v.use_before_decl && !v.positions.empty())
        eligible.push_back(&v);
    if (eligible.size() < 2 || eligible.size() > 10) continue;
    std::sort(eligible.begin(), eligible.end(),
              [](const auto* a, const auto* b) { return a->decl_tok < b->decl_tok; });

    // groups that actually permute
    std::vector<std::vector<const frontend::VarDecl*>> groups;
    if (kind == Kind::ShuffleBetween) {
      groups.push_back(eligible);
    } else {
      std::map<std::string, std::vector<const frontend::VarDecl*>> by_type;
      for (const auto* v : eligible) by_type[v->declared_type].push_back(v);
      std::vector<std::string> types;
      for (const auto& [t, vs] : by_type)
        if (vs.size() >= 2) types.push_back(t);
      // deterministic group order: first declaration first
      std::sort(types.begin(), types.end(), [&](const std::string& a, const std::string& b) {
        return by_type[a].front()->decl_tok < by_type[b].front()->decl_tok;
      });
      for (const auto& t : types) groups.push_back(by_type[t]);
    }
    if (groups.empty()) continue;
    if (stats) ++stats->candidate_locations;

    util::Rng rng(util::derive_seed(seed, path, mi));
    std::map<std::string, std::string> renames;
    bool ok = true;
    for (const auto& g : groups) {
      auto perm = derangement(rng, g.size());
      if (perm.empty()) {
        ok = false;
        break;
      }
      for (size_t i = 0; i < g.size(); ++i) renames[g[i]->name] = g[perm[i]]->name;
    }
    if (!ok || renames.empty()) continue;

    std::vector<Edit> edits;
    std::set<int> affected_lines_set;
    std::map<int, std::string> renamed_at;  // token index -> new text
    for (const auto& g : groups) {
      for (const auto* v : g) {
        const std::string& nn = renames[v->name];
        for (int pos : v->positions) {
          const Token& t = toks[static_cast<size_t>(pos)];
          edits.push_back({t.offset, tok_end(t), nn});
          affected_lines_set.insert(t.line);
          renamed_at[pos] = nn;
        }
      }
    }
    std::sort(edits.begin(), edits.end(),
              [](const Edit& x, const Edit& y) { return x.begin < y.begin; });
    std::vector<int> affected_lines(affected_lines_set.begin(), affected_lines_set.end());
    bool touched_excluded = false;
    for (int l : affected_lines) touched_excluded = touched_excluded || line_excluded(excluded, l);
    if (touched_excluded) {
      if (stats) ++stats->excluded_line_skips;
      continue;
    }
    if (!validate_shuffle(content, edits, methods, mi, renames)) {
      if (stats) ++stats->validation_failures;
      continue;
    }

    TransformRecord rec;
    rec.kind = kind;
    rec.file = path;
    rec.lines = affected_lines;
    rec.region_begin = toks[static_cast<size_t>(m.body_open_tok)].offset;
    rec.region_end = tok_end(toks[static_cast<size_t>(m.body_close_tok)]);
    rec.original_text = join_lines(content, starts, affected_lines);
    std::string t_content = apply_edits(content, edits);
    auto t_starts = line_starts(t_content);
    rec.transformed_text = join_lines(t_content, t_starts, affected_lines);
    rec.edits = std::move(edits);
    if (rec.transformed_text == rec.original_text) continue;
    // the rename shifts per-name counts, so the intersection can be smaller
    // than the affected lines themselves (names swap places one for one, but
    // a name used 4 times trading with one used twice loses the difference)
    std::vector<std::string> line_tokens, t_line_tokens;
    for (int i = m.body_open_tok; i <= m.body_close_tok; ++i) {
      const Token& t = toks[static_cast<size_t>(i)];
      if (!t.significant() || !affected_lines_set.count(t.line)) continue;
      line_tokens.push_back(t.text);
      auto rn = renamed_at.find(i);
      t_line_tokens.push_back(rn == renamed_at.end() ? t.text : rn->second);
    }
    rec.shared_tokens = multiset_intersection(std::move(line_tokens), std::move(t_line_tokens));
    rec.num_tokens = frontend::count_significant(  // body size as the size covariate
        ExprNode{NodeKind::Other, "", {}, {}, m.body_open_tok, m.body_close_tok, false},
        toks);
    rec.parent_kind = "method";
    rec.dominant_op = "rename";
    if (stats) {
      ++stats->distinct_variants;
      ++stats->emitted;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::ArithSwap: return "arith_swap";
    case Kind::RelSwap: return "rel_swap";
    case Kind::ParenAdd: return "paren_add";
    case Kind::ParenRemove: return "paren_remove";
    case Kind::ShuffleWithin: return "shuffle_within";
    case Kind::ShuffleBetween: return "shuffle_between";
  }
  return "?";
}

std::optional<Kind> kind_from_name(std::string_view name) {
  for (Kind k : all_kinds())
    if (name == kind_name(k)) return k;
  return std::nullopt;
}

std::string apply_edits(const std::string& original, const std::vector<Edit>& edits) {
  std::string out;
  out.reserve(original.size() + 16);
  size_t pos = 0;
  for (const auto& e : edits) {
    if (e.begin < pos || e.end > original.size() || e.begin > e.end)
      throw DataError("apply_edits: edit out of range or overlapping");
    out += original.substr(pos, e.begin - pos);
    out += e.replacement;
    pos = e.end;
  }
  out += original.substr(pos);
  return out;
}

std::vector<TransformRecord> find_transforms(const std::string& path,
                                             const std::string& content, Kind kind,
                                             const std::vector<bool>& excluded_lines,
                                             uint64_t seed, FindStats* stats) {
  if (kind == Kind::ShuffleWithin || kind == Kind::ShuffleBetween)
    return shuffle_transforms(path, content, kind, excluded_lines, seed, stats);

  std::vector<TransformRecord> out;
  auto toks_opt = frontend::tokenize(content);
  if (!toks_opt) return out;
  const auto& toks = *toks_opt;
  auto methods = frontend::analyze_methods(toks);
  auto sites = frontend::parse_expressions(toks);

  for (size_t si = 0; si < sites.size(); ++si) {
    const ExprSite& site = sites[si];
    if (any_line_excluded(excluded_lines, site.line_start, site.line_end)) {
      if (stats) ++stats->excluded_line_skips;
      continue;
    }
    std::map<std::string, TypeTag> locals;
    const MethodScope* m = frontend::enclosing_method(methods, site.root.first_tok);
    if (m) locals = frontend::scope_types(*m);

    auto candidates = enumerate_candidates(kind, site, toks, locals);
    if (stats) stats->candidate_locations += candidates.size();
    if (candidates.empty()) continue;

    std::vector<BuiltVariant> variants;
    std::set<std::string> seen_text;
    for (const auto& cand : candidates) {
      auto built = build_expression_variant(kind, path, content, site, toks, cand);
      if (!built) {
        if (stats) ++stats->validation_failures;
        continue;
      }
      if (!seen_text.insert(built->rec.transformed_text).second) continue;
      variants.push_back(std::move(*built));
    }
    if (stats) stats->distinct_variants += variants.size();
    if (variants.empty()) continue;

    // up to one draw per location, sampled without replacement
    size_t take = std::min(candidates.size(), variants.size());
    util::Rng rng(util::derive_seed(seed, path, si));
    std::vector<size_t> order(variants.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(take);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return variants[a].order_key < variants[b].order_key;
    });
    for (size_t idx : order) {
      out.push_back(std::move(variants[idx].rec));
      if (stats) ++stats->emitted;
    }
  }
  return out;
}

std::string serialize_records(const std::vector<TransformRecord>& records) {
  std::ostringstream os;
  os << "#transforms\tv1\n";
  for (const auto& r : records) {
    os << kind_name(r.kind) << '\t' << util::tsv_escape(r.file) << '\t'
       << r.region_begin << '\t' << r.region_end << '\t';
    for (size_t i = 0; i < r.lines.size(); ++i)
      os << (i ? "," : "") << r.lines[i];
    os << '\t' << r.num_tokens << '\t' << util::tsv_escape(r.parent_kind) << '\t'
       << util::tsv_escape(r.dominant_op) << '\t' << util::tsv_escape(r.original_text)
       << '\t' << util::tsv_escape(r.transformed_text) << '\t' << r.edits.size();
    for (const auto& e : r.edits)
      os << '\t' << e.begin << '\t' << e.end << '\t' << util::tsv_escape(e.replacement);
    os << '\t' << r.shared_tokens.size();
    for (const auto& t : r.shared_tokens) os << '\t' << util::tsv_escape(t);
    os << '\n';
  }
  return os.str();
}

std::vector<TransformRecord> parse_records(const std::string& text) {
  auto lines = util::split_lines(text);
  if (lines.empty() || lines[0].rfind("#transforms\t", 0) != 0)
    throw DataError("transform records: missing header");
  std::vector<TransformRecord> out;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    auto f = util::split(lines[li], '\t');
    auto bad = [&](const std::string& why) {
      return DataError("transform records line " + std::to_string(li + 1) + ": " + why);
    };
    if (f.size() < 12) throw bad("too few fields");
    size_t i = 0;
    TransformRecord r;
    auto kind = kind_from_name(f[i++]);
    if (!kind) throw bad("unknown kind");
    r.kind = *kind;
    r.file = util::tsv_unescape(f[i++]);
    r.region_begin = std::stoull(f[i++]);
    r.region_end = std::stoull(f[i++]);
    for (const auto& part : util::split(f[i], ','))
      if (!part.empty()) r.lines.push_back(std::stoi(part));
    ++i;
    r.num_tokens = std::stoi(f[i++]);
    r.parent_kind = util::tsv_unescape(f[i++]);
    r.dominant_op = util::tsv_unescape(f[i++]);
    r.original_text = util::tsv_unescape(f[i++]);
    r.transformed_text = util::tsv_unescape(f[i++]);
    size_t n_edits = std::stoull(f[i++]);
    if (f.size() < i + 3 * n_edits + 1) throw bad("truncated edits");
    for (size_t e = 0; e < n_edits; ++e) {
      Edit ed;
      ed.begin = std::stoull(f[i++]);
      ed.end = std::stoull(f[i++]);
      ed.replacement = util::tsv_unescape(f[i++]);
      r.edits.push_back(std::move(ed));
    }
    size_t n_shared = std::stoull(f[i++]);
    if (f.size() < i + n_shared) throw bad("truncated shared tokens");
    for (size_t s = 0; s < n_shared; ++s)
      r.shared_tokens.push_back(util::tsv_unescape(f[i++]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace natex::transforms
