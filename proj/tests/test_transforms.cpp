#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "natex/lexer.hpp"
#include "natex/transforms.hpp"
#include "natex/util.hpp"

using namespace natex;
using namespace natex::transforms;

namespace {

std::vector<TransformRecord> find(const std::string& content, Kind kind, uint64_t seed = 1,
                                  FindStats* stats = nullptr) {
  return find_transforms("Test.java", content, kind, {}, seed, stats);
}

bool has_transformed(const std::vector<TransformRecord>& recs, const std::string& text) {
  for (const auto& r : recs)
    if (r.transformed_text == text) return true;
  return false;
}

std::string in_method(const std::string& decls, const std::string& body) {
  return "class T {\n    static void m() {\n" + decls + body + "    }\n}\n";
}

std::vector<std::string> sorted_sig_tokens(const std::string& text) {
  auto toks = fixtures::lex(text);
  std::vector<std::string> out;
  for (const auto& t : toks)
    if (t.significant()) out.push_back(t.text);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> intersect_sorted(std::vector<std::string> a,
                                          std::vector<std::string> b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (Kind k : all_kinds()) {
    auto back = kind_from_name(kind_name(k));
    REQUIRE(back.has_value());
    CHECK(*back == k);
  }
  CHECK(!kind_from_name("bogus"));
}

TEST_CASE("apply_edits replaces ranges in order") {
  std::vector<Edit> edits = {{0, 1, "X"}, {2, 3, ""}, {5, 5, "!"}};
  CHECK(apply_edits("abcde", edits) == "Xbde!");
  std::vector<Edit> overlapping = {{2, 4, "x"}, {3, 5, "y"}};
  CHECK_THROWS_AS(apply_edits("abcdef", overlapping), DataError);
}

TEST_CASE("arithmetic swap mirrors one addition") {
  std::string src = in_method("        int i = 0;\n", "        i = i + 1;\n");
  auto recs = find(src, Kind::ArithSwap);
  REQUIRE(recs.size() == 1);
  const TransformRecord& r = recs[0];
  CHECK(r.kind == Kind::ArithSwap);
  CHECK(r.original_text == "i = i + 1");
  CHECK(r.transformed_text == "i = 1 + i");
  CHECK(r.dominant_op == "+");
  CHECK(r.parent_kind == "infix");
  CHECK(r.num_tokens == 5);
  CHECK(r.lines == std::vector<int>{4});
  CHECK(src.substr(r.region_begin, r.region_end - r.region_begin) == r.original_text);
  CHECK(r.shared_tokens == std::vector<std::string>{"+", "1", "=", "i", "i"});
  // the recorded edits really produce the transformed file
  std::string transformed = apply_edits(src, r.edits);
  CHECK(util::contains(transformed, "i = 1 + i;"));
}

TEST_CASE("swap applies to each join of an integer chain") {
  std::string src = in_method("        int a = 1;\n        int b = 2;\n        int c = 3;\n",
                              "        int s = a + b + c;\n");
  auto recs = find(src, Kind::ArithSwap);
  CHECK(recs.size() == 2);
  CHECK(has_transformed(recs, "b + a + c"));
  CHECK(has_transformed(recs, "a + c + b"));
}

TEST_CASE("swap eligibility is type-gated") {
  // unknown operand types: no swap
  CHECK(find(in_method("", "        r = p + q;\n"), Kind::ArithSwap).empty());
  // two double operands: allowed
  std::string two = in_method("        double d = 0.5;\n        double e = 0.25;\n",
                              "        d = d * e;\n");
  CHECK(find(two, Kind::ArithSwap).size() == 1);
  // three-operand floating chain: reassociation changes rounding, refused
  std::string three = in_method(
      "        double d = 0.5;\n        double e = 0.25;\n        double f = 2.0;\n",
      "        d = d + e + f;\n");
  CHECK(find(three, Kind::ArithSwap).empty());
  // calls anywhere in the expression: refused
  std::string call = in_method("        int i = 0;\n", "        i = i + next();\n");
  CHECK(find(call, Kind::ArithSwap).empty());
  // subtraction is not symmetric, never a candidate
  std::string minus = in_method("        int i = 9;\n", "        i = i - 1;\n");
  CHECK(find(minus, Kind::ArithSwap).empty());
}

TEST_CASE("relational swap mirrors the comparison") {
  std::string src = in_method("        int i = 0;\n        int n = 9;\n",
                              "        while (i <= n) { i = i + 1; }\n");
  auto recs = find(src, Kind::RelSwap);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].original_text == "i <= n");
  CHECK(recs[0].transformed_text == "n >= i");
  CHECK(recs[0].dominant_op == "<=");

  std::string lt = in_method("        int x = 0;\n        int y = 1;\n",
                             "        boolean b = x < y;\n");
  auto lt_recs = find(lt, Kind::RelSwap);
  REQUIRE(lt_recs.size() == 1);
  CHECK(lt_recs[0].transformed_text == "y > x");

  std::string eq = in_method("        int x = 0;\n        int y = 1;\n",
                             "        boolean b = x == y;\n");
  auto eq_recs = find(eq, Kind::RelSwap);
  REQUIRE(eq_recs.size() == 1);
  CHECK(eq_recs[0].transformed_text == "y == x");

  std::string call = in_method("        int x = 0;\n", "        boolean b = x < next();\n");
  CHECK(find(call, Kind::RelSwap).empty());
}

TEST_CASE("relational swap twice returns to the original text") {
  std::string src = in_method("        int i = 0;\n        int n = 9;\n",
                              "        boolean b = i <= n;\n");
  auto first = find(src, Kind::RelSwap);
  REQUIRE(first.size() == 1);
  std::string flipped = apply_edits(src, first[0].edits);
  auto second = find(flipped, Kind::RelSwap, 5);
  REQUIRE(second.size() == 1);
  CHECK(apply_edits(flipped, second[0].edits) == src);
}

TEST_CASE("paren add wraps subexpressions without changing the parse") {
  std::string src = in_method(
      "        int a = 1;\n        int b = 2;\n        int c = 3;\n",
      "        int r = a + b * c;\n");
  auto recs = find(src, Kind::ParenAdd);
  CHECK(has_transformed(recs, "a + (b * c)"));
  CHECK(has_transformed(recs, "(a + b * c)"));
  for (const auto& r : recs) {
    CAPTURE(r.transformed_text);
    CHECK(r.kind == Kind::ParenAdd);
    // every variant re-lexes to the same significant tokens plus one paren pair
    auto orig = sorted_sig_tokens(r.original_text);
    auto trans = sorted_sig_tokens(r.transformed_text);
    CHECK(trans.size() == orig.size() + 2);
  }
}

TEST_CASE("structurally symmetric boolean arms are wrapped together") {
  std::string src = in_method(
      "        int a = 1;\n        int b = 2;\n        int c = 3;\n        int d = 4;\n",
      "        boolean ok = a < b && c < d;\n");
  auto recs = find(src, Kind::ParenAdd);
  CHECK(has_transformed(recs, "(a < b) && (c < d)"));
  CHECK(!has_transformed(recs, "(a < b) && c < d"));
  CHECK(!has_transformed(recs, "a < b && (c < d)"));
}

TEST_CASE("paren remove keeps only parse-identical removals") {
  std::string removable = in_method("        int a = 1;\n        int b = 2;\n",
                                    "        int r = (a) + b;\n");
  auto recs = find(removable, Kind::ParenRemove);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].transformed_text == "a + b");

  FindStats st;
  std::string grouping = in_method("        int a = 1;\n        int b = 2;\n        int c = 3;\n",
                                   "        int r = (a + b) * c;\n");
  CHECK(find(grouping, Kind::ParenRemove, 1, &st).empty());
  CHECK(st.validation_failures == 1);
}

TEST_CASE("within-type shuffle permutes names of one declared type") {
  std::string src = in_method(
      "        int first = 1;\n        int second = 2;\n        double ratio = 0.5;\n",
      "        first = first + second;\n        ratio = ratio + first;\n");
  auto recs = find(src, Kind::ShuffleWithin);
  REQUIRE(recs.size() == 1);
  const TransformRecord& r = recs[0];
  CHECK(r.kind == Kind::ShuffleWithin);
  CHECK(r.parent_kind == "method");
  CHECK(r.dominant_op == "rename");
  // the two ints trade names; the double keeps its own
  std::string t = apply_edits(src, r.edits);
  CHECK(util::contains(t, "int second = 1;"));
  CHECK(util::contains(t, "int first = 2;"));
  CHECK(util::contains(t, "double ratio = 0.5;"));
  CHECK(util::contains(t, "second = second + first;"));
  CHECK(r.original_text != r.transformed_text);
  // shared tokens are the exact multiset intersection of the affected lines;
  // `first` appears 4 times and `second` twice, so the swap loses two matches
  auto orig = sorted_sig_tokens(r.original_text);
  auto trans = sorted_sig_tokens(r.transformed_text);
  CHECK(r.shared_tokens == intersect_sorted(orig, trans));
  CHECK(r.shared_tokens.size() == orig.size() - 2);
}

TEST_CASE("between-type shuffle deranges all eligible names") {
  std::string src = in_method(
      "        int first = 1;\n        int second = 2;\n        double ratio = 0.5;\n",
      "        first = first + second;\n        ratio = ratio + first;\n");
  auto recs = find(src, Kind::ShuffleBetween, 3);
  REQUIRE(recs.size() == 1);
  std::string t = apply_edits(src, recs[0].edits);
  // nothing keeps its name
  CHECK(!util::contains(t, "int first = 1;"));
  CHECK(!util::contains(t, "int second = 2;"));
  CHECK(!util::contains(t, "double ratio = 0.5;"));
  CHECK(recs[0].shared_tokens ==
        intersect_sorted(sorted_sig_tokens(recs[0].original_text),
                         sorted_sig_tokens(recs[0].transformed_text)));
}

TEST_CASE("shuffle skip rules") {
  // a single eligible local cannot permute
  CHECK(find(in_method("        int only = 1;\n", "        only = only + 1;\n"),
             Kind::ShuffleBetween)
            .empty());
  // lambdas make renames unsafe, the method is skipped
  std::string lam = in_method(
      "        int a = 1;\n        int b = 2;\n",
      "        r = x -> a + b;\n");
  CHECK(find(lam, Kind::ShuffleBetween).empty());
  // duplicate declarations of one name disqualify it
  std::string dup = in_method(
      "", "        for (int i = 0; i < 3; i++) { }\n        for (int i = 0; i < 5; i++) { }\n");
  CHECK(find(dup, Kind::ShuffleWithin).empty());
}

TEST_CASE("excluded lines suppress sites") {
  std::string src = in_method("        int i = 0;\n", "        i = i + 1;\n");
  auto lines = util::split_lines(src);
  std::vector<bool> excluded(lines.size() + 1, false);
  excluded[4] = true;  // the assignment line
  FindStats st;
  auto recs = find_transforms("Test.java", src, Kind::ArithSwap, excluded, 1, &st);
  CHECK(recs.empty());
  CHECK(st.excluded_line_skips == 1);
}

TEST_CASE("records serialize and parse back") {
  std::string src = in_method(
      "        int a = 1;\n        int b = 2;\n        int c = 3;\n",
      "        int r = a + b * c;\n        boolean ok = a < b;\n");
  std::vector<TransformRecord> all;
  for (Kind k : all_kinds())
    for (auto& r : find(src, k)) all.push_back(std::move(r));
  REQUIRE(!all.empty());

  std::string text = serialize_records(all);
  auto parsed = parse_records(text);
  REQUIRE(parsed.size() == all.size());
  for (size_t i = 0; i < all.size(); ++i) {
    CHECK(parsed[i].kind == all[i].kind);
    CHECK(parsed[i].file == all[i].file);
    CHECK(parsed[i].region_begin == all[i].region_begin);
    CHECK(parsed[i].region_end == all[i].region_end);
    CHECK(parsed[i].lines == all[i].lines);
    CHECK(parsed[i].original_text == all[i].original_text);
    CHECK(parsed[i].transformed_text == all[i].transformed_text);
    CHECK(parsed[i].shared_tokens == all[i].shared_tokens);
    CHECK(parsed[i].num_tokens == all[i].num_tokens);
    CHECK(parsed[i].parent_kind == all[i].parent_kind);
    CHECK(parsed[i].dominant_op == all[i].dominant_op);
    REQUIRE(parsed[i].edits.size() == all[i].edits.size());
    for (size_t e = 0; e < all[i].edits.size(); ++e) {
      CHECK(parsed[i].edits[e].begin == all[i].edits[e].begin);
      CHECK(parsed[i].edits[e].end == all[i].edits[e].end);
      CHECK(parsed[i].edits[e].replacement == all[i].edits[e].replacement);
    }
  }
  CHECK_THROWS_AS(parse_records("no header"), DataError);
}

TEST_CASE("discovery is deterministic in the seed") {
  std::string src = fixtures::sample_java();
  for (Kind k : all_kinds()) {
    auto a = find(src, k, 42);
    auto b = find(src, k, 42);
    CHECK(serialize_records(a) == serialize_records(b));
  }
}
