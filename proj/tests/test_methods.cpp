#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "natex/methods.hpp"

using namespace natex;
using namespace natex::frontend;

namespace {

const MethodScope* by_name(const std::vector<MethodScope>& ms, const std::string& name) {
  for (const auto& m : ms)
    if (m.name == name) return &m;
  return nullptr;
}

const VarDecl* local(const MethodScope& m, const std::string& name) {
  for (const auto& v : m.locals)
    if (v.name == name) return &v;
  return nullptr;
}

}  // namespace

TEST_CASE("method bodies and locals of the sample file") {
  auto toks = fixtures::lex(fixtures::sample_java());
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 5);

  const MethodScope* acc = by_name(methods, "accumulate");
  REQUIRE(acc != nullptr);
  CHECK(local(*acc, "total") != nullptr);
  CHECK(local(*acc, "i") != nullptr);  // for-init declaration
  CHECK(local(*acc, "total")->declared_type == "int");
  CHECK(local(*acc, "values") == nullptr);  // parameters live outside the body

  const MethodScope* lab = by_name(methods, "label");
  REQUIRE(lab != nullptr);
  CHECK(local(*lab, "prefix") != nullptr);
  CHECK(local(*lab, "prefix")->declared_type == "String");
  CHECK(local(*lab, "sep")->declared_type == "char");
}

TEST_CASE("occurrence positions are bare uses only") {
  std::string src = R"(class C {
    void m() {
        int count = 1;
        count = count + 1;
        this.count = 9;
        other.count = 9;
        count();
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 1);
  const VarDecl* v = local(methods[0], "count");
  REQUIRE(v != nullptr);
  // decl + two bare uses; field accesses and the call are excluded
  CHECK(v->positions.size() == 3);
  for (int pos : v->positions) CHECK(toks[pos].text == "count");
  CHECK(v->decl_tok >= 0);
  CHECK(!v->use_before_decl);
}

TEST_CASE("use before declaration is flagged") {
  std::string src = R"(class C {
    void m() {
        x = 1;
        int x = 2;
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 1);
  const VarDecl* v = local(methods[0], "x");
  REQUIRE(v != nullptr);
  CHECK(v->use_before_decl);
}

TEST_CASE("duplicate declarations are counted") {
  std::string src = R"(class C {
    void m() {
        for (int i = 0; i < 3; i++) { }
        for (int i = 9; i > 0; i--) { }
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 1);
  const VarDecl* v = local(methods[0], "i");
  REQUIRE(v != nullptr);
  CHECK(v->decl_count_in_method == 2);
}

TEST_CASE("lambdas and method references mark the scope") {
  std::string with = "class C { void m() { r = x -> x + 1; } }";
  std::string without = "class C { void m() { r = x + 1; } }";
  auto m1 = analyze_methods(fixtures::lex(with));
  auto m2 = analyze_methods(fixtures::lex(without));
  REQUIRE(m1.size() == 1);
  REQUIRE(m2.size() == 1);
  CHECK(m1[0].contains_lambda);
  CHECK(!m2[0].contains_lambda);
}

TEST_CASE("enclosing_method finds the innermost body") {
  auto toks = fixtures::lex(fixtures::sample_java());
  auto methods = analyze_methods(toks);
  const MethodScope* acc = by_name(methods, "accumulate");
  REQUIRE(acc != nullptr);
  int inside = acc->body_open_tok + 1;
  CHECK(enclosing_method(methods, inside) == acc);
  CHECK(enclosing_method(methods, 0) == nullptr);
}

TEST_CASE("local_types keeps only uniquely declared names") {
  std::string src = R"(class C {
    void m() {
        int a = 1;
        double b = 2.0;
        for (int i = 0; i < 3; i++) { }
        for (long i = 9; i > 0; i--) { }
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 1);
  auto types = local_types(methods[0]);
  CHECK(types.at("a") == TypeTag::Int);
  CHECK(types.at("b") == TypeTag::Double);
  CHECK(types.find("i") == types.end());  // declared twice
}

TEST_CASE("parameters are typed but never shuffled") {
  std::string src = R"(class C {
    static int mix(final int aa, long[] bb, String... rest) {
        int kk = aa + 1;
        return kk;
    }
    void edge(java.util.List<String> items, int n) {
        use(items, n);
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 2);

  const MethodScope* mix = by_name(methods, "mix");
  REQUIRE(mix != nullptr);
  REQUIRE(mix->params.size() == 3);
  CHECK(mix->params[0].name == "aa");
  CHECK(mix->params[0].declared_type == "int");
  CHECK(mix->params[1].declared_type == "long[]");
  CHECK(mix->params[2].declared_type == "String[]");  // varargs tag as arrays
  CHECK(local(*mix, "aa") == nullptr);                // not a shuffle candidate

  auto types = scope_types(*mix);
  CHECK(types.at("aa") == TypeTag::Int);
  CHECK(types.at("kk") == TypeTag::Int);
  CHECK(types.at("bb") == TypeTag::Unknown);  // arrays are not scalars

  // a dotted type stops the scan; later parameters stay untyped, not mistyped
  const MethodScope* edge = by_name(methods, "edge");
  REQUIRE(edge != nullptr);
  CHECK(edge->params.empty());
}

TEST_CASE("catch and foreach declarations are collected") {
  std::string src = R"(class C {
    void m(java.util.List<String> items) {
        for (String item : items) { use(item); }
        try { risky(); } catch (Exception ex) { log(ex); }
    }
})";
  auto toks = fixtures::lex(src);
  auto methods = analyze_methods(toks);
  REQUIRE(methods.size() == 1);
  CHECK(local(methods[0], "item") != nullptr);
  CHECK(local(methods[0], "ex") != nullptr);
  CHECK(local(methods[0], "item")->declared_type == "String");
}
