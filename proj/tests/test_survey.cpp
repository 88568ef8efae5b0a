#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "natex/survey.hpp"
#include "natex/transforms.hpp"
#include "natex/util.hpp"

using namespace natex;
using namespace natex::survey;
using experiment::DeltaRecord;
using experiment::ModelId;
using transforms::Kind;

namespace {

DeltaRecord make_record(const std::string& file, Kind kind, double line_delta,
                        const std::string& orig, const std::string& trans,
                        ModelId model = ModelId::Global) {
  DeltaRecord d;
  d.model = model;
  d.kind = kind;
  d.file = file;
  d.n_lines = 1;
  d.line_delta = line_delta;
  d.delta = line_delta;
  d.original_line = orig;
  d.transformed_line = trans;
  return d;
}

std::vector<DeltaRecord> selection_fixture() {
  std::vector<DeltaRecord> recs;
  // six clean arithmetic candidates with distinct shapes (kept literals and
  // the operator keep their abstracted signatures apart)
  recs.push_back(make_record("f_a1", Kind::ArithSwap, -3.0, "k = aa + 1;", "k = 1 + aa;"));
  recs.push_back(make_record("f_a2", Kind::ArithSwap, -2.0, "k = aa + 2;", "k = 2 + aa;"));
  recs.push_back(make_record("f_a3", Kind::ArithSwap, -1.0, "k = aa + 3;", "k = 3 + aa;"));
  recs.push_back(make_record("f_a4", Kind::ArithSwap, 0.5, "k = aa * 1;", "k = 1 * aa;"));
  recs.push_back(make_record("f_a5", Kind::ArithSwap, 1.0, "k = aa * 2;", "k = 2 * aa;"));
  recs.push_back(make_record("f_a6", Kind::ArithSwap, 2.0, "k = aa * 3;", "k = 3 * aa;"));
  // same abstracted shape as f_a1, ranked between the top two
  recs.push_back(make_record("f_dup", Kind::ArithSwap, -2.5, "m = bb + 1;", "m = 1 + bb;"));
  // one relational candidate
  recs.push_back(make_record("f_r1", Kind::RelSwap, -1.0, "if (aa < bb) {", "if (bb > aa) {"));
  // all of these must be filtered out
  DeltaRecord multi = make_record("f_multi", Kind::ArithSwap, -10.0, "x = a + b;", "x = b + a;");
  multi.n_lines = 2;
  recs.push_back(multi);
  recs.push_back(make_record("f_long", Kind::ArithSwap, -9.0,
                             std::string(81, 'x') + " + y;", "y + long;"));
  recs.push_back(make_record("f_hash", Kind::ArithSwap, -8.0, "h = hash + 1;", "h = 1 + hash;"));
  recs.push_back(make_record("f_shift", Kind::ArithSwap, -7.5, "s = (a << 2) + b;",
                             "s = b + (a << 2);"));
  recs.push_back(make_record("f_model", Kind::ArithSwap, -7.0, "c = aa + 7;", "c = 7 + aa;",
                             ModelId::Cache));
  recs.push_back(make_record("f_same", Kind::ArithSwap, -6.5, "k = q + q;", "k = q + q;"));
  recs.push_back(make_record("f_empty", Kind::ArithSwap, -6.25, "k = w + 9;", ""));
  recs.push_back(make_record("f_shuffle", Kind::ShuffleWithin, -6.0, "int zz = 1;", "int yy = 1;"));
  return recs;
}

SurveyPair make_pair(const std::string& id, Kind kind, const std::string& a, const std::string& b,
                     Side orig_is, Preference pref) {
  SurveyPair p;
  p.id = id;
  p.kind = kind;
  p.text_a = a;
  p.text_b = b;
  p.original_is = orig_is;
  p.lm_prefers = pref;
  p.line_delta = pref == Preference::Original ? -1.0 : 1.0;
  p.file = "fixture_" + id;
  return p;
}

std::vector<SurveyPair> three_pairs() {
  return {
      make_pair("p001", Kind::ArithSwap, "k = aa + 1;", "k = 1 + aa;", Side::A,
                Preference::Original),
      make_pair("p002", Kind::ArithSwap, "k = aa * 2;", "k = 2 * aa;", Side::A,
                Preference::Transformed),
      make_pair("p003", Kind::RelSwap, "if (aa < bb) {", "if (bb > aa) {", Side::A,
                Preference::Original),
  };
}

std::vector<SurveyPair> ten_pairs() {
  std::vector<SurveyPair> out;
  for (int i = 0; i < 10; ++i) {
    std::string n = std::to_string(i);
    out.push_back(make_pair("p00" + n, Kind::ArithSwap, "k = aa + " + n + ";",
                            "k = " + n + " + aa;", Side::A, Preference::Original));
  }
  return out;
}

}  // namespace

TEST_CASE("pair selection ranks both directions and filters noise") {
  auto recs = selection_fixture();
  SelectResult res = select_pairs(recs, 2);
  REQUIRE(res.pairs.size() == 5);

  // arithmetic: two most negative, then two most positive, then relational
  CHECK(res.pairs[0].file == "f_a1");
  CHECK(res.pairs[1].file == "f_a2");  // f_dup skipped for its repeated shape
  CHECK(res.pairs[2].file == "f_a6");
  CHECK(res.pairs[3].file == "f_a5");
  CHECK(res.pairs[4].file == "f_r1");

  CHECK(res.pairs[0].id == "p001");
  CHECK(res.pairs[4].id == "p005");
  CHECK(res.pairs[4].kind == Kind::RelSwap);

  for (const auto& p : res.pairs) {
    CHECK(p.original_is == Side::A);
    CHECK(!p.text_a.empty());
  }
  CHECK(res.pairs[0].lm_prefers == Preference::Original);
  CHECK(res.pairs[0].text_a == "k = aa + 1;");
  CHECK(res.pairs[0].text_b == "k = 1 + aa;");
  CHECK(res.pairs[2].lm_prefers == Preference::Transformed);

  std::set<std::string> files;
  for (const auto& p : res.pairs) files.insert(p.file);
  for (const char* banned : {"f_multi", "f_long", "f_hash", "f_shift", "f_model", "f_same",
                             "f_empty", "f_shuffle", "f_dup"})
    CHECK(!files.count(banned));

  // short cells warn: relational found 1 of 2 then 0 of 2, parens found none
  CHECK(res.warnings.size() == 6);
  bool saw_rel = false;
  for (const auto& w : res.warnings)
    if (util::contains(w, transforms::kind_name(Kind::RelSwap))) saw_rel = true;
  CHECK(saw_rel);

  CHECK_THROWS_AS(select_pairs(recs, 0), ConfigError);
}

TEST_CASE("selection does not depend on record order") {
  auto recs = selection_fixture();
  SelectResult a = select_pairs(recs, 2);
  std::reverse(recs.begin(), recs.end());
  SelectResult b = select_pairs(recs, 2);
  CHECK(serialize_pairs(a.pairs) == serialize_pairs(b.pairs));
}

TEST_CASE("pairs survive a serialize round-trip") {
  auto pairs = three_pairs();
  pairs[1].original_is = Side::B;
  pairs[1].text_a = "line\twith\ttabs";
  std::string text = serialize_pairs(pairs);
  auto back = parse_pairs(text);
  REQUIRE(back.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].id == pairs[i].id);
    CHECK(back[i].kind == pairs[i].kind);
    CHECK(back[i].text_a == pairs[i].text_a);
    CHECK(back[i].text_b == pairs[i].text_b);
    CHECK(back[i].original_is == pairs[i].original_is);
    CHECK(back[i].lm_prefers == pairs[i].lm_prefers);
    CHECK(back[i].line_delta == pairs[i].line_delta);
    CHECK(back[i].file == pairs[i].file);
  }

  CHECK_THROWS_AS(parse_pairs(""), DataError);
  CHECK_THROWS_AS(parse_pairs("#wrong\tv1\n"), DataError);
  auto dup = three_pairs();
  dup[2].id = dup[0].id;
  CHECK_THROWS_AS(parse_pairs(serialize_pairs(dup)), DataError);
  CHECK_THROWS_AS(parse_pairs("#survey-pairs\tv1\np001\tonly_two\n"), DataError);
}

TEST_CASE("the attention id continues the numbering") {
  CHECK(attention_id(0) == "p001");
  CHECK(attention_id(3) == "p004");
  CHECK(attention_id(159) == "p160");
  CHECK(attention_id(1000) == "p1001");
}

TEST_CASE("forms sample questions and hide one attention check") {
  auto pairs = ten_pairs();
  auto forms = emit_survey(pairs, 4, 5, 42);
  REQUIRE(forms.size() == 4);
  std::string att = attention_id(pairs.size());

  for (const auto& form : forms) {
    REQUIRE(form.questions.size() == 6);  // five samples plus the check
    int n_attention = 0;
    std::set<std::string> seen_ids;
    for (const auto& q : form.questions) {
      if (q.attention) {
        ++n_attention;
        CHECK(q.pair_id == att);
        // both loop spellings appear, order per the side flip
        std::string both = q.text_a + "|" + q.text_b;
        CHECK(util::contains(both, "i < length"));
        CHECK(util::contains(both, "length > i"));
        continue;
      }
      CHECK(seen_ids.insert(q.pair_id).second);  // no repeats within a form
      auto it = std::find_if(pairs.begin(), pairs.end(),
                             [&](const SurveyPair& p) { return p.id == q.pair_id; });
      REQUIRE(it != pairs.end());
      if (q.swapped) {
        CHECK(q.text_a == it->text_b);
        CHECK(q.text_b == it->text_a);
      } else {
        CHECK(q.text_a == it->text_a);
        CHECK(q.text_b == it->text_b);
      }
    }
    CHECK(n_attention == 1);
  }

  // same seed, same forms; new seed, new forms
  auto again = emit_survey(pairs, 4, 5, 42);
  auto other = emit_survey(pairs, 4, 5, 43);
  std::string t1, t2, t3;
  for (size_t i = 0; i < forms.size(); ++i) {
    t1 += format_form(forms[i]);
    t2 += format_form(again[i]);
    t3 += format_form(other[i]);
  }
  CHECK(t1 == t2);
  CHECK(t1 != t3);

  CHECK(emit_survey(pairs, 0, 5, 1).empty());
  CHECK_THROWS_AS(emit_survey(pairs, 2, 11, 1), ConfigError);  // more than available
  CHECK_THROWS_AS(emit_survey(pairs, 2, 0, 1), ConfigError);
  auto dup = ten_pairs();
  dup[1].id = dup[0].id;
  CHECK_THROWS_AS(emit_survey(dup, 1, 2, 1), ConfigError);
}

TEST_CASE("side assignment is balanced across forms") {
  auto pairs = ten_pairs();
  auto forms = emit_survey(pairs, 200, 5, 7);
  int swapped = 0, total = 0;
  std::set<size_t> attention_positions;
  for (const auto& form : forms) {
    for (size_t q = 0; q < form.questions.size(); ++q) {
      if (form.questions[q].attention) {
        attention_positions.insert(q);
        continue;
      }
      ++total;
      if (form.questions[q].swapped) ++swapped;
    }
  }
  CHECK(total == 1000);
  double frac = static_cast<double>(swapped) / total;
  CHECK(frac > 0.4);
  CHECK(frac < 0.6);
  CHECK(attention_positions.size() > 1);  // the check moves around
}

TEST_CASE("rendered forms and the answer key stay consistent") {
  auto pairs = ten_pairs();
  auto forms = emit_survey(pairs, 3, 4, 9);
  std::string rendered = format_form(forms[0]);
  auto lines = util::split_lines(rendered);
  REQUIRE(lines.size() == 6);  // header plus five questions
  CHECK(lines[0] == "#survey-form\tv1\tform=1\tquestions=5");
  CHECK(util::split(lines[1], '\t')[0] == "1");
  CHECK(util::split(lines[5], '\t')[0] == "5");

  std::string key = format_answer_key(forms);
  auto key_lines = util::split_lines(key);
  REQUIRE(key_lines.size() == 1 + 3 * 5);
  CHECK(key_lines[0] == "#survey-key\tv1");
  size_t row = 1;
  for (const auto& form : forms) {
    for (size_t q = 0; q < form.questions.size(); ++q, ++row) {
      auto f = util::split(key_lines[row], '\t');
      REQUIRE(f.size() == 5);
      CHECK(f[0] == std::to_string(form.form_id));
      CHECK(f[1] == std::to_string(q + 1));
      CHECK(f[2] == form.questions[q].pair_id);
      CHECK(f[3] == (form.questions[q].swapped ? "b" : "a"));
      CHECK(f[4] == (form.questions[q].attention ? "1" : "0"));
    }
  }
}

TEST_CASE("response parsing skips comments and rejects bad rows") {
  std::vector<ResponseRecord> rs = {{"r1", "p001", 'a'}, {"r2", "p001", 'b'}};
  auto back = parse_responses(serialize_responses(rs));
  REQUIRE(back.size() == 2);
  CHECK(back[0].respondent == "r1");
  CHECK(back[0].pair_id == "p001");
  CHECK(back[0].choice == 'a');
  CHECK(back[1].choice == 'b');

  CHECK(parse_responses("# all comments\n#more\n").empty());
  CHECK_THROWS_AS(parse_responses("r1\tp001\tc\n"), DataError);
  CHECK_THROWS_AS(parse_responses("r1\tp001\n"), DataError);
}

TEST_CASE("agreement analysis matches a hand-worked fixture") {
  auto pairs = three_pairs();
  // model sides: p001 -> a, p002 -> b, p003 -> a; attention id is p004
  std::vector<ResponseRecord> rs = {
      {"r1", "p001", 'a'}, {"r1", "p002", 'b'}, {"r1", "p003", 'a'}, {"r1", "p004", 'a'},
      {"r2", "p001", 'b'}, {"r2", "p002", 'b'}, {"r2", "p003", 'b'}, {"r2", "p004", 'b'},
      {"r3", "p001", 'a'}, {"r3", "p003", 'b'},
      {"r1", "p099", 'a'},
  };
  AgreementReport rep = analyze_responses(rs, pairs);

  CHECK(rep.n_responses == 8);
  CHECK(rep.n_rejected == 1);
  CHECK(rep.n_respondents == 3);
  CHECK(rep.n_questions == 3);
  CHECK(rep.overall_agreement == doctest::Approx(5.0 / 8.0));
  // p001 majority a (right), p002 majority b (right), p003 majority b (wrong)
  CHECK(rep.majority_agreement == doctest::Approx(2.0 / 3.0));

  std::string arith = transforms::kind_name(Kind::ArithSwap);
  std::string rel = transforms::kind_name(Kind::RelSwap);
  CHECK(rep.per_kind_n.at(arith) == 5);
  CHECK(rep.per_kind_n.at(rel) == 3);
  CHECK(rep.per_kind_agreement.at(arith) == doctest::Approx(4.0 / 5.0));
  CHECK(rep.per_kind_agreement.at(rel) == doctest::Approx(1.0 / 3.0));
  CHECK(rep.per_kind_majority.at(arith) == doctest::Approx(1.0));
  CHECK(rep.per_kind_majority.at(rel) == doctest::Approx(0.0));

  // r2 failed the check; r3 has no attention row and passes by default
  CHECK(rep.n_passed_respondents == 2);
  CHECK(rep.n_failed_respondents == 1);
  CHECK(rep.passed_agreement == doctest::Approx(4.0 / 5.0));
  CHECK(rep.failed_agreement == doctest::Approx(1.0 / 3.0));
  REQUIRE(rep.rejects.size() == 1);
  CHECK(util::contains(rep.rejects[0], "p099"));

  std::string report = format_report(rep);
  CHECK(util::contains(report, "overall_agreement\t0.625"));
  CHECK(util::contains(report, "respondents\t3"));
  CHECK(util::contains(report, "reject\t"));
  CHECK(util::contains(report, "kind\t" + arith + "\tn\t5"));
}

TEST_CASE("an even vote splits the majority credit") {
  auto pairs = three_pairs();
  std::vector<ResponseRecord> rs = {
      {"r1", "p001", 'a'},
      {"r2", "p001", 'b'},
  };
  AgreementReport rep = analyze_responses(rs, pairs);
  CHECK(rep.n_questions == 1);
  CHECK(rep.majority_agreement == doctest::Approx(0.5));
  CHECK(rep.overall_agreement == doctest::Approx(0.5));
}

TEST_CASE("a flipped canonical side flips the model side") {
  std::vector<SurveyPair> pairs = {
      make_pair("p001", Kind::ArithSwap, "k = 1 + aa;", "k = aa + 1;", Side::B,
                Preference::Original),
  };
  // the original sits on side b, so choosing b agrees with the model
  std::vector<ResponseRecord> rs = {{"r1", "p001", 'b'}};
  AgreementReport rep = analyze_responses(rs, pairs);
  CHECK(rep.overall_agreement == doctest::Approx(1.0));

  std::string rows = long_format(rs, pairs);
  auto lines = util::split_lines(rows);
  REQUIRE(lines.size() == 2);
  CHECK(lines[1] == std::string("1\t1\t") + transforms::kind_name(Kind::ArithSwap) +
                        "\tr1\tp001");
}

TEST_CASE("the long format lists one row per scored response") {
  auto pairs = three_pairs();
  std::vector<ResponseRecord> rs = {
      {"r1", "p001", 'a'}, {"r1", "p004", 'a'},  // attention row skipped
      {"r2", "p002", 'a'}, {"r2", "p099", 'b'},  // unknown pair skipped
  };
  std::string rows = long_format(rs, pairs);
  auto lines = util::split_lines(rows);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "outcome\tlm_out\tkind\trespondent\tquestion");
  CHECK(lines[1] == std::string("1\t1\t") + transforms::kind_name(Kind::ArithSwap) +
                        "\tr1\tp001");
  // r2 chose the original side of p002 while the model preferred the other
  CHECK(lines[2] == std::string("1\t0\t") + transforms::kind_name(Kind::ArithSwap) +
                        "\tr2\tp002");
}
