#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "natex/experiment.hpp"
#include "natex/transforms.hpp"

namespace natex::survey {

enum class Side { A, B };
enum class Preference { Original, Transformed };

// One forced-choice item. Canonical pairs keep the original line as text_a;
// per-form side shuffling happens at emit time and is undone by the answer
// key, so response files always use canonical sides.
struct SurveyPair {
  std::string id;
  transforms::Kind kind = transforms::Kind::ArithSwap;
  std::string text_a;
  std::string text_b;
  Side original_is = Side::A;
  Preference lm_prefers = Preference::Original;
  double line_delta = 0.0;
  // provenance, also the deterministic tie-breaker
  std::string file;
  size_t region_begin = 0;
  size_t region_end = 0;
};

struct SelectResult {
  std::vector<SurveyPair> pairs;
  std::vector<std::string> warnings;
};

// Picks survey items from single-line delta records of one model: per kind
// (swaps and paren edits only) the per_cell strongest lines in each delta
// direction. Lines over 80 characters or mentioning hashing/bit-shift tokens
// are excluded; items whose abstracted token sequences repeat an already
// chosen item are replaced from the next per_cell ranks. Output order and
// ids are independent of the input record order.
SelectResult select_pairs(const std::vector<experiment::DeltaRecord>& records,
                          int per_cell = 20,
                          experiment::ModelId model = experiment::ModelId::Global);

std::string serialize_pairs(const std::vector<SurveyPair>& pairs);
std::vector<SurveyPair> parse_pairs(const std::string& text);  // throws DataError

// The id both forms and response files use for the attention-check item; it
// continues the pair numbering so filled forms do not single it out.
std::string attention_id(size_t n_pairs);

struct FormQuestion {
  std::string pair_id;
  std::string text_a;  // as shown; swapped == true means canonical text_b
  std::string text_b;
  bool swapped = false;
  bool attention = false;
};

struct SurveyForm {
  int form_id = 0;
  std::vector<FormQuestion> questions;
};

// Builds n_forms forms of per_respondent sampled questions plus one
// attention check (a fixed for-loop pair) at a seeded random position.
// Question order and side assignment are reshuffled per form.
std::vector<SurveyForm> emit_survey(const std::vector<SurveyPair>& pairs, int n_forms,
                                    int per_respondent = 80, uint64_t seed = 0);

std::string format_form(const SurveyForm& form);
// One answer-key row per question of every form: canonical side shown as 'a'
// plus the attention flag.
std::string format_answer_key(const std::vector<SurveyForm>& forms);

// Responses use canonical sides: choice 'a' picks the pair's text_a.
struct ResponseRecord {
  std::string respondent;
  std::string pair_id;
  char choice = 'a';
};

// Line format: respondent_id <tab> pair_id <tab> a|b. '#' lines are skipped.
std::string serialize_responses(const std::vector<ResponseRecord>& responses);
std::vector<ResponseRecord> parse_responses(const std::string& text);  // throws DataError

struct AgreementReport {
  int n_responses = 0;   // valid non-attention rows
  int n_rejected = 0;
  int n_respondents = 0;
  int n_questions = 0;   // distinct pairs with at least one response
  double overall_agreement = 0.0;
  double majority_agreement = 0.0;  // per-question majority vote; ties count 0.5
  std::map<std::string, int> per_kind_n;
  std::map<std::string, double> per_kind_agreement;
  std::map<std::string, double> per_kind_majority;
  // respondents split by the attention item; no attention row counts as passed
  int n_passed_respondents = 0;
  int n_failed_respondents = 0;
  double passed_agreement = 0.0;
  double failed_agreement = 0.0;
  std::vector<std::string> rejects;  // one diagnostic per rejected row
};

AgreementReport analyze_responses(const std::vector<ResponseRecord>& responses,
                                  const std::vector<SurveyPair>& pairs);

std::string format_report(const AgreementReport& report);

// One row per valid response for external mixed-effects fitting:
// outcome (1 = respondent chose the original side), lm_out (1 = model
// preferred the original side), kind, respondent, question.
std::string long_format(const std::vector<ResponseRecord>& responses,
                        const std::vector<SurveyPair>& pairs);

}  // namespace natex::survey
