#include "natex/survey.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "natex/lexer.hpp"
#include "natex/ngram.hpp"
#include "natex/util.hpp"

namespace natex::survey {

namespace {

using experiment::DeltaRecord;

constexpr const char* kAttentionA = "for(int i = 0; i < length; i++) {";
constexpr const char* kAttentionB = "for(int i = 0; length > i; i++) {";

const std::array<transforms::Kind, 4> kSurveyKinds = {
    transforms::Kind::ArithSwap, transforms::Kind::RelSwap, transforms::Kind::ParenAdd,
    transforms::Kind::ParenRemove};

bool mentions_filtered_token(const std::string& line) {
  return util::contains(line, "hash") || util::contains(line, "<<") ||
         util::contains(line, ">>") || util::contains(line, ">>>");
}

// Abstracted token sequence; near-duplicates are lines that collide here.
std::string abstract_signature(const std::string& line) {
  auto toks = frontend::tokenize(line);
  if (!toks) return "!" + line;
  std::string sig;
  for (const auto& t : *toks) {
    if (!t.significant()) continue;
    sig += lm::abstract_token(t.cat, t.text);
    sig += '\x1f';
  }
  return sig;
}

std::string pair_signature(const DeltaRecord& d) {
  return abstract_signature(d.original_line) + '\x1e' + abstract_signature(d.transformed_line);
}

std::string record_key(const DeltaRecord& d) {
  return d.file + ':' + std::to_string(d.region_begin) + ':' + std::to_string(d.region_end);
}

std::string make_pair_id(size_t idx0) {
  std::string n = std::to_string(idx0 + 1);
  while (n.size() < 3) n.insert(n.begin(), '0');
  return "p" + n;
}

char side_char(Side s) { return s == Side::A ? 'a' : 'b'; }

// canonical side ('a' or 'b') holding the line the model found more probable
char lm_side(const SurveyPair& p) {
  bool original_is_a = p.original_is == Side::A;
  bool prefers_original = p.lm_prefers == Preference::Original;
  return original_is_a == prefers_original ? 'a' : 'b';
}

}  // namespace

std::string attention_id(size_t n_pairs) { return make_pair_id(n_pairs); }

SelectResult select_pairs(const std::vector<DeltaRecord>& records, int per_cell,
                          experiment::ModelId model) {
  if (per_cell < 1) throw ConfigError("per_cell must be positive");
  SelectResult res;

  for (transforms::Kind kind : kSurveyKinds) {
    std::vector<const DeltaRecord*> cand;
    for (const auto& d : records) {
      if (d.model != model || d.kind != kind) continue;
      if (d.n_lines != 1) continue;
      if (d.original_line.empty() || d.transformed_line.empty()) continue;
      if (d.original_line == d.transformed_line) continue;
      if (d.original_line.size() > 80 || d.transformed_line.size() > 80) continue;
      if (mentions_filtered_token(d.original_line) || mentions_filtered_token(d.transformed_line))
        continue;
      cand.push_back(&d);
    }
    auto tie_lt = [](const DeltaRecord* x, const DeltaRecord* y) {
      return std::tie(x->file, x->region_begin, x->region_end) <
             std::tie(y->file, y->region_begin, y->region_end);
    };
    std::vector<const DeltaRecord*> asc = cand;
    std::sort(asc.begin(), asc.end(), [&](const DeltaRecord* x, const DeltaRecord* y) {
      if (x->line_delta != y->line_delta) return x->line_delta < y->line_delta;
      return tie_lt(x, y);
    });
    std::vector<const DeltaRecord*> desc = cand;
    std::sort(desc.begin(), desc.end(), [&](const DeltaRecord* x, const DeltaRecord* y) {
      if (x->line_delta != y->line_delta) return x->line_delta > y->line_delta;
      return tie_lt(x, y);
    });

    // greedy fill: first per_cell distinct-signature items from the top
    // 2*per_cell ranks, so duplicates get replaced by the next ranks
    std::set<std::string> sigs;
    std::set<std::string> chosen;
    auto pick = [&](const std::vector<const DeltaRecord*>& ranked, const char* direction) {
      std::vector<const DeltaRecord*> out;
      size_t limit = std::min(ranked.size(), static_cast<size_t>(2 * per_cell));
      for (size_t i = 0; i < limit && out.size() < static_cast<size_t>(per_cell); ++i) {
        const DeltaRecord* d = ranked[i];
        if (chosen.count(record_key(*d))) continue;
        std::string sig = pair_signature(*d);
        if (sigs.count(sig)) continue;
        sigs.insert(std::move(sig));
        chosen.insert(record_key(*d));
        out.push_back(d);
      }
      if (out.size() < static_cast<size_t>(per_cell))
        res.warnings.push_back(std::string(transforms::kind_name(kind)) + " " + direction +
                               ": only " + std::to_string(out.size()) + " of " +
                               std::to_string(per_cell) + " pairs");
      return out;
    };
    std::vector<const DeltaRecord*> picked = pick(asc, "most-negative");
    for (const DeltaRecord* d : pick(desc, "most-positive")) picked.push_back(d);

    for (const DeltaRecord* d : picked) {
      SurveyPair p;
      p.id = make_pair_id(res.pairs.size());
      p.kind = kind;
      p.text_a = d->original_line;
      p.text_b = d->transformed_line;
      p.original_is = Side::A;
      p.lm_prefers = d->line_delta <= 0 ? Preference::Original : Preference::Transformed;
      p.line_delta = d->line_delta;
      p.file = d->file;
      p.region_begin = d->region_begin;
      p.region_end = d->region_end;
      res.pairs.push_back(std::move(p));
    }
  }
  return res;
}

std::string serialize_pairs(const std::vector<SurveyPair>& pairs) {
  std::string out = "#survey-pairs\tv1\n";
  for (const auto& p : pairs) {
    out += p.id;
    out += '\t';
    out += transforms::kind_name(p.kind);
    out += '\t';
    out += util::tsv_escape(p.text_a);
    out += '\t';
    out += util::tsv_escape(p.text_b);
    out += '\t';
    out += side_char(p.original_is);
    out += '\t';
    out += p.lm_prefers == Preference::Original ? "original" : "transformed";
    out += '\t';
    out += util::format_double(p.line_delta);
    out += '\t';
    out += util::tsv_escape(p.file);
    out += '\t';
    out += std::to_string(p.region_begin);
    out += '\t';
    out += std::to_string(p.region_end);
    out += '\n';
  }
  return out;
}

std::vector<SurveyPair> parse_pairs(const std::string& text) {
  auto lines = util::split_lines(text);
  if (lines.empty() || lines[0] != "#survey-pairs\tv1")
    throw DataError("pairs file missing '#survey-pairs\tv1' header");
  std::vector<SurveyPair> out;
  std::unordered_set<std::string> ids;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    auto f = util::split(lines[li], '\t');
    if (f.size() != 10)
      throw DataError("pairs line " + std::to_string(li + 1) + ": expected 10 fields, got " +
                      std::to_string(f.size()));
    SurveyPair p;
    p.id = f[0];
    if (!ids.insert(p.id).second) throw DataError("duplicate pair id '" + p.id + "'");
    auto kid = transforms::kind_from_name(f[1]);
    if (!kid) throw DataError("unknown transform kind '" + f[1] + "' in pairs file");
    p.kind = *kid;
    p.text_a = util::tsv_unescape(f[2]);
    p.text_b = util::tsv_unescape(f[3]);
    if (f[4] == "a") p.original_is = Side::A;
    else if (f[4] == "b") p.original_is = Side::B;
    else throw DataError("bad original_is '" + f[4] + "' in pairs file");
    if (f[5] == "original") p.lm_prefers = Preference::Original;
    else if (f[5] == "transformed") p.lm_prefers = Preference::Transformed;
    else throw DataError("bad lm_prefers '" + f[5] + "' in pairs file");
    try {
      size_t pos = 0;
      p.line_delta = std::stod(f[6], &pos);
      if (pos != f[6].size()) throw DataError("");
    } catch (const std::exception&) {
      throw DataError("bad line_delta '" + f[6] + "' in pairs file");
    }
    p.file = util::tsv_unescape(f[7]);
    try {
      p.region_begin = std::stoull(f[8]);
      p.region_end = std::stoull(f[9]);
    } catch (const std::exception&) {
      throw DataError("bad region span in pairs file line " + std::to_string(li + 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SurveyForm> emit_survey(const std::vector<SurveyPair>& pairs, int n_forms,
                                    int per_respondent, uint64_t seed) {
  if (n_forms < 0) throw ConfigError("n_forms must be non-negative");
  if (per_respondent < 1) throw ConfigError("per_respondent must be positive");
  if (static_cast<size_t>(per_respondent) > pairs.size())
    throw ConfigError("per_respondent " + std::to_string(per_respondent) + " exceeds the " +
                      std::to_string(pairs.size()) + " available pairs");
  {
    std::unordered_set<std::string> ids;
    for (const auto& p : pairs)
      if (!ids.insert(p.id).second) throw ConfigError("duplicate pair id '" + p.id + "'");
  }

  std::string att_id = attention_id(pairs.size());
  std::vector<SurveyForm> forms;
  forms.reserve(static_cast<size_t>(n_forms));
  for (int f = 1; f <= n_forms; ++f) {
    util::Rng rng(util::derive_seed(seed, "survey-form", static_cast<uint64_t>(f)));
    std::vector<size_t> idx(pairs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);

    SurveyForm form;
    form.form_id = f;
    for (int q = 0; q < per_respondent; ++q) {
      const SurveyPair& p = pairs[idx[static_cast<size_t>(q)]];
      FormQuestion question;
      question.pair_id = p.id;
      question.swapped = rng.below(2) == 1;
      question.text_a = question.swapped ? p.text_b : p.text_a;
      question.text_b = question.swapped ? p.text_a : p.text_b;
      form.questions.push_back(std::move(question));
    }
    FormQuestion att;
    att.pair_id = att_id;
    att.attention = true;
    att.swapped = rng.below(2) == 1;
    att.text_a = att.swapped ? kAttentionB : kAttentionA;
    att.text_b = att.swapped ? kAttentionA : kAttentionB;
    size_t pos = rng.below(form.questions.size() + 1);
    form.questions.insert(form.questions.begin() + static_cast<ptrdiff_t>(pos), std::move(att));
    forms.push_back(std::move(form));
  }
  return forms;
}

std::string format_form(const SurveyForm& form) {
  std::string out = "#survey-form\tv1\tform=" + std::to_string(form.form_id) +
                    "\tquestions=" + std::to_string(form.questions.size()) + "\n";
  for (size_t q = 0; q < form.questions.size(); ++q) {
    out += std::to_string(q + 1);
    out += '\t';
    out += form.questions[q].pair_id;
    out += '\t';
    out += util::tsv_escape(form.questions[q].text_a);
    out += '\t';
    out += util::tsv_escape(form.questions[q].text_b);
    out += '\n';
  }
  return out;
}

std::string format_answer_key(const std::vector<SurveyForm>& forms) {
  std::string out = "#survey-key\tv1\n";
  for (const auto& form : forms) {
    for (size_t q = 0; q < form.questions.size(); ++q) {
      const FormQuestion& question = form.questions[q];
      out += std::to_string(form.form_id);
      out += '\t';
      out += std::to_string(q + 1);
      out += '\t';
      out += question.pair_id;
      out += '\t';
      out += question.swapped ? 'b' : 'a';  // canonical side shown first
      out += '\t';
      out += question.attention ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

std::string serialize_responses(const std::vector<ResponseRecord>& responses) {
  std::string out = "#survey-responses\tv1\n";
  for (const auto& r : responses) {
    out += util::tsv_escape(r.respondent);
    out += '\t';
    out += r.pair_id;
    out += '\t';
    out += r.choice;
    out += '\n';
  }
  return out;
}

std::vector<ResponseRecord> parse_responses(const std::string& text) {
  auto lines = util::split_lines(text);
  std::vector<ResponseRecord> out;
  for (size_t li = 0; li < lines.size(); ++li) {
    if (lines[li].empty() || lines[li][0] == '#') continue;
    auto f = util::split(lines[li], '\t');
    if (f.size() != 3)
      throw DataError("responses line " + std::to_string(li + 1) + ": expected 3 fields, got " +
                      std::to_string(f.size()));
    if (f[2] != "a" && f[2] != "b")
      throw DataError("responses line " + std::to_string(li + 1) + ": choice must be a or b");
    ResponseRecord r;
    r.respondent = util::tsv_unescape(f[0]);
    r.pair_id = f[1];
    r.choice = f[2][0];
    out.push_back(std::move(r));
  }
  return out;
}

AgreementReport analyze_responses(const std::vector<ResponseRecord>& responses,
                                  const std::vector<SurveyPair>& pairs) {
  std::unordered_map<std::string, const SurveyPair*> by_id;
  for (const auto& p : pairs) by_id[p.id] = &p;
  std::string att_id = attention_id(pairs.size());

  AgreementReport rep;
  struct PairTally {
    int a = 0;
    int b = 0;
  };
  std::map<std::string, PairTally> tallies;  // pair id -> votes
  struct RespondentTally {
    int agree = 0;
    int total = 0;
    bool failed_attention = false;
  };
  std::map<std::string, RespondentTally> respondents;
  std::map<std::string, std::pair<int, int>> kind_rows;  // kind -> (agree, total)

  for (size_t i = 0; i < responses.size(); ++i) {
    const ResponseRecord& r = responses[i];
    if (r.pair_id == att_id) {
      auto& rt = respondents[r.respondent];
      if (r.choice != 'a') rt.failed_attention = true;
      continue;
    }
    auto it = by_id.find(r.pair_id);
    if (it == by_id.end()) {
      rep.n_rejected++;
      rep.rejects.push_back("row " + std::to_string(i + 1) + ": unknown pair id '" + r.pair_id +
                            "'");
      continue;
    }
    const SurveyPair& p = *it->second;
    bool agree = r.choice == lm_side(p);
    rep.n_responses++;
    auto& rt = respondents[r.respondent];
    rt.total++;
    if (agree) rt.agree++;
    auto& kt = kind_rows[transforms::kind_name(p.kind)];
    kt.second++;
    if (agree) kt.first++;
    auto& t = tallies[r.pair_id];
    if (r.choice == 'a') t.a++;
    else t.b++;
  }

  rep.n_respondents = static_cast<int>(respondents.size());
  int agree_rows = 0;
  for (const auto& [name, kt] : kind_rows) {
    rep.per_kind_n[name] = kt.second;
    rep.per_kind_agreement[name] = kt.second ? static_cast<double>(kt.first) / kt.second : 0.0;
    agree_rows += kt.first;
  }
  rep.overall_agreement = rep.n_responses ? static_cast<double>(agree_rows) / rep.n_responses : 0.0;

  rep.n_questions = static_cast<int>(tallies.size());
  double majority_sum = 0.0;
  std::map<std::string, std::pair<double, int>> kind_majority;
  for (const auto& [id, t] : tallies) {
    const SurveyPair& p = *by_id.at(id);
    double credit;
    if (t.a == t.b) credit = 0.5;
    else credit = ((t.a > t.b ? 'a' : 'b') == lm_side(p)) ? 1.0 : 0.0;
    majority_sum += credit;
    auto& km = kind_majority[transforms::kind_name(p.kind)];
    km.first += credit;
    km.second++;
  }
  rep.majority_agreement = rep.n_questions ? majority_sum / rep.n_questions : 0.0;
  for (const auto& [name, km] : kind_majority)
    rep.per_kind_majority[name] = km.second ? km.first / km.second : 0.0;

  int passed_agree = 0, passed_total = 0, failed_agree = 0, failed_total = 0;
  for (const auto& [name, rt] : respondents) {
    if (rt.failed_attention) {
      rep.n_failed_respondents++;
      failed_agree += rt.agree;
      failed_total += rt.total;
    } else {
      rep.n_passed_respondents++;
      passed_agree += rt.agree;
      passed_total += rt.total;
    }
  }
  rep.passed_agreement = passed_total ? static_cast<double>(passed_agree) / passed_total : 0.0;
  rep.failed_agreement = failed_total ? static_cast<double>(failed_agree) / failed_total : 0.0;
  return rep;
}

std::string format_report(const AgreementReport& rep) {
  std::string out = "#survey-report\tv1\n";
  out += "responses\t" + std::to_string(rep.n_responses) + "\n";
  out += "rejected\t" + std::to_string(rep.n_rejected) + "\n";
  out += "respondents\t" + std::to_string(rep.n_respondents) + "\n";
  out += "questions\t" + std::to_string(rep.n_questions) + "\n";
  out += "overall_agreement\t" + util::format_double(rep.overall_agreement) + "\n";
  out += "majority_agreement\t" + util::format_double(rep.majority_agreement) + "\n";
  out += "passed_respondents\t" + std::to_string(rep.n_passed_respondents) + "\n";
  out += "failed_respondents\t" + std::to_string(rep.n_failed_respondents) + "\n";
  out += "passed_agreement\t" + util::format_double(rep.passed_agreement) + "\n";
  out += "failed_agreement\t" + util::format_double(rep.failed_agreement) + "\n";
  for (const auto& [name, n] : rep.per_kind_n) {
    out += "kind\t" + name + "\tn\t" + std::to_string(n) + "\tagreement\t" +
           util::format_double(rep.per_kind_agreement.at(name)) + "\tmajority\t" +
           util::format_double(rep.per_kind_majority.count(name) ? rep.per_kind_majority.at(name)
                                                                 : 0.0) +
           "\n";
  }
  for (const auto& r : rep.rejects) out += "reject\t" + r + "\n";
  return out;
}

std::string long_format(const std::vector<ResponseRecord>& responses,
                        const std::vector<SurveyPair>& pairs) {
  std::unordered_map<std::string, const SurveyPair*> by_id;
  for (const auto& p : pairs) by_id[p.id] = &p;
  std::string att_id = attention_id(pairs.size());

  std::string out = "outcome\tlm_out\tkind\trespondent\tquestion\n";
  for (const auto& r : responses) {
    if (r.pair_id == att_id) continue;
    auto it = by_id.find(r.pair_id);
    if (it == by_id.end()) continue;
    const SurveyPair& p = *it->second;
    char orig_side = p.original_is == Side::A ? 'a' : 'b';
    out += (r.choice == orig_side) ? '1' : '0';
    out += '\t';
    out += (p.lm_prefers == Preference::Original) ? '1' : '0';
    out += '\t';
    out += transforms::kind_name(p.kind);
    out += '\t';
    out += util::tsv_escape(r.respondent);
    out += '\t';
    out += r.pair_id;
    out += '\n';
  }
  return out;
}

}  // namespace natex::survey
