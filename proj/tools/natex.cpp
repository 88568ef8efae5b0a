#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "natex/corpus.hpp"
#include "natex/demo.hpp"
#include "natex/experiment.hpp"
#include "natex/lexer.hpp"
#include "natex/ngram.hpp"
#include "natex/parser.hpp"
#include "natex/stats.hpp"
#include "natex/survey.hpp"
#include "natex/transforms.hpp"
#include "natex/util.hpp"

namespace fs = std::filesystem;
using namespace natex;

namespace {

// ---------------------------------------------------------------------------
// shared helpers

std::vector<std::string> csv_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : util::split(s, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::vector<transforms::Kind> parse_kinds(const std::string& csv) {
  if (csv.empty() || csv == "all") {
    auto a = transforms::all_kinds();
    return {a.begin(), a.end()};
  }
  std::vector<transforms::Kind> out;
  for (const auto& name : csv_list(csv)) {
    auto k = transforms::kind_from_name(name);
    if (!k) throw ConfigError("unknown transform kind '" + name + "'");
    out.push_back(*k);
  }
  if (out.empty()) throw ConfigError("no transform kinds selected");
  return out;
}

std::vector<experiment::ModelId> parse_models(const std::string& csv) {
  if (csv.empty() || csv == "all") return experiment::all_models();
  std::vector<experiment::ModelId> out;
  for (const auto& name : csv_list(csv)) {
    auto m = experiment::model_from_name(name);
    if (!m) throw ConfigError("unknown model '" + name + "'");
    out.push_back(*m);
  }
  if (out.empty()) throw ConfigError("no models selected");
  return out;
}

corpus::Split parse_split(const std::string& s) {
  if (s == "train") return corpus::Split::Train;
  if (s == "test") return corpus::Split::Test;
  if (s == "all") return corpus::Split::Unassigned;  // sentinel: every entry
  throw ConfigError("split must be train, test or all");
}

// entries of the wanted split; an unsplit manifest contributes everything
std::vector<const corpus::FileEntry*> entries_for(const corpus::Manifest& m, corpus::Split want) {
  std::vector<const corpus::FileEntry*> out;
  for (const auto& e : m.entries)
    if (want == corpus::Split::Unassigned || e.split == want || !m.split_done)
      out.push_back(&e);
  return out;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  util::write_file(path, content);
}

// ---------------------------------------------------------------------------
// corpus

void run_corpus_ingest(const std::vector<std::string>& roots, const std::string& out) {
  corpus::IngestStats st;
  corpus::Manifest m = corpus::ingest(roots, &st);
  corpus::save_manifest(m, out);
  std::cout << "ingested " << st.files << " files from " << roots.size() << " roots ("
            << st.skipped_unreadable << " unreadable skipped) -> " << out << "\n";
}

void run_corpus_dedup(const std::string& in, const std::string& out) {
  corpus::Manifest m = corpus::load_manifest(in);
  size_t removed = corpus::dedup(m);
  corpus::save_manifest(m, out);
  std::cout << "removed " << removed << " duplicate entries, kept " << m.entries.size() << " -> "
            << out << "\n";
}

void run_corpus_split(const std::string& in, double ratio, uint64_t seed, const std::string& out) {
  corpus::Manifest m = corpus::load_manifest(in);
  corpus::split_by_project(m, ratio, seed);
  corpus::save_manifest(m, out);
  size_t train = m.files(corpus::Split::Train).size();
  size_t test = m.files(corpus::Split::Test).size();
  std::cout << "split " << m.entries.size() << " files: " << train << " train, " << test
            << " test -> " << out << "\n";
}

// ---------------------------------------------------------------------------
// frontend

void run_frontend_dump(const std::string& file) {
  std::string content = util::read_file(file);
  frontend::LexError err;
  auto toks = frontend::tokenize(content, &err);
  if (!toks)
    throw DataError(file + ": lex error at line " + std::to_string(err.line) + ": " + err.message);
  std::string out;
  for (const auto& t : *toks) {
    if (!t.significant()) continue;
    out += std::to_string(t.line);
    out += ':';
    out += std::to_string(t.col);
    out += '\t';
    out += frontend::token_cat_name(t.cat);
    out += '\t';
    out += util::tsv_escape(t.text);
    out += '\n';
  }
  auto sites = frontend::parse_expressions(*toks);
  out += frontend::dump_sites(*toks, sites);
  std::cout << out;
}

// ---------------------------------------------------------------------------
// transforms

corpus::LineFilter count_lines(const std::vector<const corpus::FileEntry*>& files,
                               int dup_threshold) {
  corpus::LineFilter filter(dup_threshold);
  for (const auto* e : files) {
    try {
      filter.count_file(util::read_file(e->path));
    } catch (const std::exception& ex) {
      std::cerr << "warn: " << ex.what() << "\n";
    }
  }
  return filter;
}

std::vector<transforms::TransformRecord> discover_transforms(
    const corpus::Manifest& m, corpus::Split split, const std::vector<transforms::Kind>& kinds,
    uint64_t seed, int dup_threshold, std::map<std::string, transforms::FindStats>* stats_out) {
  auto files = entries_for(m, split);
  if (files.empty()) throw DataError("no files in the requested split");
  corpus::LineFilter filter = count_lines(files, dup_threshold);
  std::vector<transforms::TransformRecord> records;
  for (const auto* e : files) {
    std::string content;
    try {
      content = util::read_file(e->path);
    } catch (const std::exception& ex) {
      std::cerr << "warn: " << ex.what() << "\n";
      continue;
    }
    auto excluded = filter.excluded_lines(content);
    for (transforms::Kind kind : kinds) {
      transforms::FindStats st;
      try {
        auto recs = transforms::find_transforms(e->path, content, kind, excluded, seed, &st);
        for (auto& r : recs) records.push_back(std::move(r));
      } catch (const std::exception& ex) {
        std::cerr << "warn: " << e->path << ": " << ex.what() << "\n";
      }
      if (stats_out) {
        auto& agg = (*stats_out)[transforms::kind_name(kind)];
        agg.candidate_locations += st.candidate_locations;
        agg.distinct_variants += st.distinct_variants;
        agg.emitted += st.emitted;
        agg.validation_failures += st.validation_failures;
        agg.excluded_line_skips += st.excluded_line_skips;
      }
    }
  }
  return records;
}

void print_find_stats(const std::map<std::string, transforms::FindStats>& stats) {
  for (const auto& [name, st] : stats)
    std::cout << name << ": " << st.emitted << " emitted (" << st.candidate_locations
              << " locations, " << st.distinct_variants << " variants, "
              << st.validation_failures << " validation failures, " << st.excluded_line_skips
              << " excluded-line skips)\n";
}

void run_transform_run(const std::string& manifest, const std::string& kinds_csv,
                       const std::string& split_str, uint64_t seed, int dup_threshold,
                       const std::string& out) {
  corpus::Manifest m = corpus::load_manifest(manifest);
  auto kinds = parse_kinds(kinds_csv);
  std::map<std::string, transforms::FindStats> stats;
  auto records = discover_transforms(m, parse_split(split_str), kinds, seed, dup_threshold, &stats);
  util::write_file(out, transforms::serialize_records(records));
  print_find_stats(stats);
  std::cout << records.size() << " transform records -> " << out << "\n";
}

// ---------------------------------------------------------------------------
// lm

lm::NgramModel train_from_manifest(const corpus::Manifest& m, corpus::Split split, int order,
                                   double lambda, bool abstracted) {
  auto files = entries_for(m, split);
  if (files.empty()) throw DataError("lm train: no files in the requested split");
  lm::NgramModel model(order, lambda, abstracted);
  int skipped = 0;
  for (const auto* e : files) {
    std::string content;
    try {
      content = util::read_file(e->path);
    } catch (const std::exception&) {
      ++skipped;
      continue;
    }
    auto toks = frontend::tokenize(content);
    if (!toks) {
      ++skipped;
      continue;
    }
    model.add_file(lm::token_texts(*toks, abstracted));
  }
  if (skipped) std::cerr << "warn: skipped " << skipped << " unreadable or unlexable files\n";
  return model;
}

void run_lm_train(const std::string& manifest, const std::string& split_str, int order,
                  double lambda, bool abstracted, const std::string& out) {
  corpus::Manifest m = corpus::load_manifest(manifest);
  lm::NgramModel model = train_from_manifest(m, parse_split(split_str), order, lambda, abstracted);
  model.save(out);
  std::cout << "trained order-" << order << (abstracted ? " abstracted" : "") << " model: vocab "
            << model.vocab_size() << ", tokens " << model.total_tokens() << " -> " << out << "\n";
}

void run_lm_score(const std::string& model_path, const std::string& file, bool use_cache,
                  double lambda_cache, bool per_token) {
  lm::NgramModel model = lm::NgramModel::load(model_path);
  std::string content = util::read_file(file);
  frontend::LexError err;
  auto toks = frontend::tokenize(content, &err);
  if (!toks)
    throw DataError(file + ": lex error at line " + std::to_string(err.line) + ": " + err.message);
  auto texts = lm::token_texts(*toks, model.abstracted());
  auto scores = lm::score_stream(model, texts, use_cache, lambda_cache);
  double total = 0;
  for (double s : scores) total += s;
  std::string out;
  if (per_token) {
    for (size_t i = 0; i < texts.size(); ++i)
      out += util::tsv_escape(texts[i]) + "\t" + util::format_double(scores[i]) + "\n";
  }
  out += "tokens\t" + std::to_string(scores.size()) + "\n";
  out += "total_bits\t" + util::format_double(total) + "\n";
  out += "mean_bits\t" +
         util::format_double(scores.empty() ? 0.0 : total / static_cast<double>(scores.size())) +
         "\n";
  std::cout << out;
}

// ---------------------------------------------------------------------------
// experiment

struct ExpOpts {
  std::string train_manifest, test_manifest, global_model, abs_model, out;
  std::string kinds = "all", models = "all";
  uint64_t seed = 0;
  int order = 6;
  double lambda = 0.5, lambda_cache = 0.5;
  int dup_threshold = 100;
  int threads = 0;
};

void run_experiment_run(const ExpOpts& o) {
  auto kinds = parse_kinds(o.kinds);
  auto model_ids = parse_models(o.models);
  bool need_raw = false, need_abs = false;
  for (auto id : model_ids) (experiment::model_abstracted(id) ? need_abs : need_raw) = true;

  std::optional<corpus::Manifest> train_m;
  auto ensure_train = [&]() -> corpus::Manifest& {
    if (!train_m) {
      if (o.train_manifest.empty())
        throw ConfigError("experiment run: need --train-manifest or pre-trained model files");
      train_m = corpus::load_manifest(o.train_manifest);
    }
    return *train_m;
  };

  std::optional<lm::NgramModel> raw, abs;
  if (need_raw) {
    if (!o.global_model.empty()) {
      raw = lm::NgramModel::load(o.global_model);
      if (raw->abstracted())
        throw ConfigError("--global-model points at an abstracted model file");
    } else {
      raw = train_from_manifest(ensure_train(), corpus::Split::Train, o.order, o.lambda, false);
    }
  }
  if (need_abs) {
    if (!o.abs_model.empty()) {
      abs = lm::NgramModel::load(o.abs_model);
      if (!abs->abstracted())
        throw ConfigError("--abs-model points at a non-abstracted model file");
    } else {
      abs = train_from_manifest(ensure_train(), corpus::Split::Train, o.order, o.lambda, true);
    }
  }

  corpus::Manifest test_m = corpus::load_manifest(o.test_manifest);
  std::map<std::string, transforms::FindStats> fstats;
  auto records =
      discover_transforms(test_m, corpus::Split::Test, kinds, o.seed, o.dup_threshold, &fstats);

  experiment::ModelSet ms;
  ms.raw = raw ? &*raw : nullptr;
  ms.abs = abs ? &*abs : nullptr;
  ms.lambda_cache = o.lambda_cache;
  auto res = experiment::run_experiment(records, ms, model_ids, o.threads);
  util::write_file(o.out, experiment::serialize_deltas(res.records));

  for (const auto& e : res.errors) std::cerr << "warn: " << e << "\n";
  print_find_stats(fstats);
  std::cout << "scored " << res.stats.records_in << " transforms over " << res.stats.files
            << " files: " << res.stats.records_out << " delta records ("
            << res.stats.dropped_empty_shared << " dropped with empty shared set, "
            << res.stats.failed_files << " files failed) -> " << o.out << "\n";
}

void run_experiment_aggregate(const std::string& in, double alpha, const std::string& out) {
  auto records = experiment::parse_deltas(util::read_file(in));
  auto cells = experiment::aggregate(records, alpha);
  write_output(out, experiment::format_table(cells));
}

// ---------------------------------------------------------------------------
// stats

void run_stats_wilcoxon(const std::string& in, const std::string& group_csv, size_t family_size,
                        double alpha, const std::string& out) {
  auto records = experiment::parse_deltas(util::read_file(in));
  auto fields = csv_list(group_csv);
  if (fields.empty()) throw ConfigError("--group needs at least one of kind, model");
  for (const auto& f : fields)
    if (f != "kind" && f != "model") throw ConfigError("unknown group field '" + f + "'");

  std::map<std::string, std::vector<double>> groups;
  for (const auto& d : records) {
    std::string key;
    for (const auto& f : fields) {
      if (!key.empty()) key += '\t';
      key += f == "kind" ? transforms::kind_name(d.kind) : experiment::model_name(d.model);
    }
    groups[key].push_back(d.delta);
  }
  size_t family = family_size;
  if (family == 0)
    for (const auto& [k, v] : groups)
      if (v.size() >= 2) ++family;

  std::string text;
  for (const auto& f : fields) text += f + "\t";
  text += "n\tmedian\tpseudomedian\tp_value\tci_low\tci_high\texact\n";
  for (const auto& [key, deltas] : groups) {
    text += key + "\t" + std::to_string(deltas.size());
    if (deltas.size() < 2) {
      text += "\tNA\tNA\tNA\tNA\tNA\tNA\n";
      continue;
    }
    auto w = stats::wilcoxon_signed_rank(deltas, alpha, family);
    text += "\t" + util::format_double(stats::median_of(deltas));
    text += "\t" + util::format_double(w.pseudomedian);
    text += "\t" + util::format_double(w.p_two_sided);
    text += "\t" + util::format_double(w.ci_low);
    text += "\t" + util::format_double(w.ci_high);
    text += w.exact ? "\t1\n" : "\t0\n";
  }
  write_output(out, text);
}

void run_stats_ols(const std::string& in, size_t min_level_count, const std::string& out) {
  auto records = experiment::parse_deltas(util::read_file(in));
  if (records.empty()) throw DataError("ols: no delta records in " + in);

  struct Cat {
    const char* name;
    std::vector<std::string> values;
  };
  std::vector<Cat> cats = {{"kind", {}}, {"model", {}}, {"parent_kind", {}}, {"dominant_op", {}}};
  for (const auto& d : records) {
    cats[0].values.push_back(transforms::kind_name(d.kind));
    cats[1].values.push_back(experiment::model_name(d.model));
    cats[2].values.push_back(d.parent_kind);
    cats[3].values.push_back(d.dominant_op);
  }
  std::vector<std::set<std::string>> kept;
  for (const auto& c : cats) {
    auto freq = stats::frequent_levels(c.values, min_level_count);
    kept.emplace_back(freq.begin(), freq.end());
  }
  std::vector<size_t> rows;
  for (size_t i = 0; i < records.size(); ++i) {
    bool ok = true;
    for (size_t c = 0; c < cats.size(); ++c)
      if (!kept[c].count(cats[c].values[i])) ok = false;
    if (ok) rows.push_back(i);
  }
  if (rows.size() < 2) throw DataError("ols: fewer than two rows after rare-level filtering");

  std::vector<double> y;
  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  for (size_t i : rows) y.push_back(records[i].delta);
  auto add_numeric = [&](const char* name, auto getter) {
    std::vector<double> col;
    for (size_t i : rows) col.push_back(getter(records[i]));
    cols.push_back(std::move(col));
    names.push_back(name);
  };
  add_numeric("mean_surprisal_original",
              [](const experiment::DeltaRecord& d) { return d.mean_surprisal_original; });
  add_numeric("num_tokens",
              [](const experiment::DeltaRecord& d) { return static_cast<double>(d.num_tokens); });
  add_numeric("n_lines",
              [](const experiment::DeltaRecord& d) { return static_cast<double>(d.n_lines); });
  for (size_t c = 0; c < cats.size(); ++c) {
    std::set<std::string> present;
    for (size_t i : rows) present.insert(cats[c].values[i]);
    if (present.size() < 2) continue;
    bool first = true;
    for (const auto& level : present) {
      if (first) {  // drop-first encoding
        first = false;
        continue;
      }
      std::vector<double> col;
      for (size_t i : rows) col.push_back(cats[c].values[i] == level ? 1.0 : 0.0);
      cols.push_back(std::move(col));
      names.push_back(std::string(cats[c].name) + "=" + level);
    }
  }

  // A factor level implied by other columns (an operator only one kind can
  // produce, say) makes the design exactly singular. Drop such columns up
  // front, greedily, keeping the intercept and earlier columns; the fit
  // itself stays strict.
  std::vector<std::string> dropped;
  {
    Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(cols.size()) + 1);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    Eigen::Index b = 0;
    basis.col(b++) = v / v.norm();
    std::vector<std::vector<double>> kept_cols;
    std::vector<std::string> kept_names;
    for (size_t c = 0; c < cols.size(); ++c) {
      for (Eigen::Index r = 0; r < n; ++r) v(r) = cols[c][static_cast<size_t>(r)];
      double norm0 = v.norm();
      for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize for stability
        for (Eigen::Index k = 0; k < b; ++k) v -= basis.col(k).dot(v) * basis.col(k);
      if (norm0 <= 0.0 || v.norm() <= 1e-8 * norm0) {
        dropped.push_back(names[c]);
        continue;
      }
      basis.col(b++) = v / v.norm();
      kept_cols.push_back(std::move(cols[c]));
      kept_names.push_back(std::move(names[c]));
    }
    cols = std::move(kept_cols);
    names = std::move(kept_names);
  }
  if (cols.empty()) throw DataError("ols: every column is collinear with the intercept");

  auto fit = stats::ols_fit(y, cols, names);
  std::string text = "term\tcoef\tse\n";
  for (size_t i = 0; i < fit.names.size(); ++i)
    text += fit.names[i] + "\t" + util::format_double(fit.coef[i]) + "\t" +
            util::format_double(fit.se[i]) + "\n";
  text += "r_squared\t" + util::format_double(fit.r_squared) + "\n";
  text += "n_used\t" + std::to_string(fit.n_used) + "\n";
  text += "n_removed_outliers\t" + std::to_string(fit.n_removed_outliers) + "\n";
  text += "rows_dropped_rare_levels\t" + std::to_string(records.size() - rows.size()) + "\n";
  for (const auto& name : dropped) text += "dropped_collinear\t" + name + "\n";
  for (const auto& [name, v] : fit.vif) text += "vif\t" + name + "\t" + util::format_double(v) + "\n";
  text += std::string("vif_warning\t") + (fit.vif_warning ? "1" : "0") + "\n";
  write_output(out, text);
}

// ---------------------------------------------------------------------------
// survey

void run_survey_select(const std::string& in, int per_cell, const std::string& model_name,
                       const std::string& out) {
  auto model = experiment::model_from_name(model_name);
  if (!model) throw ConfigError("unknown model '" + model_name + "'");
  auto records = experiment::parse_deltas(util::read_file(in));
  auto sel = survey::select_pairs(records, per_cell, *model);
  for (const auto& w : sel.warnings) std::cerr << "warn: " << w << "\n";
  util::write_file(out, survey::serialize_pairs(sel.pairs));
  std::cout << sel.pairs.size() << " survey pairs -> " << out << "\n";
}

std::string form_file_name(int id) {
  std::string n = std::to_string(id);
  while (n.size() < 3) n.insert(n.begin(), '0');
  return "form_" + n + ".txt";
}

void run_survey_emit(const std::string& pairs_path, int n_forms, int per_respondent,
                     uint64_t seed, const std::string& out_dir) {
  auto pairs = survey::parse_pairs(util::read_file(pairs_path));
  auto forms = survey::emit_survey(pairs, n_forms, per_respondent, seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create directory " + out_dir);
  for (const auto& f : forms)
    util::write_file((fs::path(out_dir) / form_file_name(f.form_id)).string(),
                     survey::format_form(f));
  util::write_file((fs::path(out_dir) / "answer_key.tsv").string(),
                   survey::format_answer_key(forms));
  std::cout << forms.size() << " forms (" << per_respondent << "+1 questions each) -> " << out_dir
            << "\n";
}

void run_survey_analyze(const std::string& pairs_path, const std::string& responses_path,
                        const std::string& out, std::string long_out) {
  auto pairs = survey::parse_pairs(util::read_file(pairs_path));
  auto responses = survey::parse_responses(util::read_file(responses_path));
  auto report = survey::analyze_responses(responses, pairs);
  write_output(out, survey::format_report(report));
  if (long_out.empty() && !out.empty() && out != "-") long_out = out + ".long.tsv";
  if (!long_out.empty()) util::write_file(long_out, survey::long_format(responses, pairs));
  std::cout << "agreement " << util::format_double(report.overall_agreement) << " over "
            << report.n_responses << " responses (" << report.n_rejected << " rejected)\n";
}

// ---------------------------------------------------------------------------
// demo

void run_demo(const std::string& dir, int projects, int files, int methods, uint64_t seed) {
  demo::DemoSpec spec;
  spec.projects = projects;
  spec.files_per_project = files;
  spec.methods_per_file = methods;
  spec.seed = seed;
  demo::write_corpus(dir, spec);
  std::cout << "wrote " << projects * files << " files under " << dir << "\n";
  for (const auto& d : demo::project_dirs(dir, spec)) std::cout << d << "\n";
}

// ---------------------------------------------------------------------------
// pipeline

struct PipeConfig {
  uint64_t seed = 0;
  int order = 6;
  double lambda_jm = 0.5;
  double lambda_cache = 0.5;
  int dup_threshold = 100;
  double ratio = 0.7;
  std::vector<std::string> roots;
  std::string out_dir = "out";
  std::string kinds = "all";
  std::string models = "all";
  std::string survey_model = "global";
  int per_cell = 20;
  int n_forms = 2;
  int per_respondent = 80;
  int threads = 0;
};

// config file wins over flags by specification
void apply_config_file(PipeConfig& cfg, const std::string& path) {
  auto parse_u64 = [&](const std::string& v, const char* key) -> uint64_t {
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("config: bad value for ") + key + ": '" + v + "'");
    }
  };
  auto parse_int = [&](const std::string& v, const char* key) -> int {
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("config: bad value for ") + key + ": '" + v + "'");
    }
  };
  auto parse_dbl = [&](const std::string& v, const char* key) -> double {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("config: bad value for ") + key + ": '" + v + "'");
    }
  };
  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  for (const auto& raw : util::split_lines(util::read_file(path))) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key=value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "seed") cfg.seed = parse_u64(value, "seed");
    else if (key == "order") cfg.order = parse_int(value, "order");
    else if (key == "lambda_jm") cfg.lambda_jm = parse_dbl(value, "lambda_jm");
    else if (key == "lambda_cache") cfg.lambda_cache = parse_dbl(value, "lambda_cache");
    else if (key == "dup_threshold") cfg.dup_threshold = parse_int(value, "dup_threshold");
    else if (key == "ratio") cfg.ratio = parse_dbl(value, "ratio");
    else if (key == "roots") cfg.roots = csv_list(value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "kinds") cfg.kinds = value;
    else if (key == "models") cfg.models = value;
    else if (key == "survey_model") cfg.survey_model = value;
    else if (key == "per_cell") cfg.per_cell = parse_int(value, "per_cell");
    else if (key == "n_forms") cfg.n_forms = parse_int(value, "n_forms");
    else if (key == "per_respondent") cfg.per_respondent = parse_int(value, "per_respondent");
    else if (key == "threads") cfg.threads = parse_int(value, "threads");
    else throw ConfigError("config: unknown key '" + key + "'");
  }
}

std::string resolved_config(const PipeConfig& cfg) {
  std::string roots;
  for (const auto& r : cfg.roots) {
    if (!roots.empty()) roots += ',';
    roots += r;
  }
  std::string out = "#natex-config\tv1\n";
  out += "dup_threshold=" + std::to_string(cfg.dup_threshold) + "\n";
  out += "kinds=" + cfg.kinds + "\n";
  out += "lambda_cache=" + util::format_double(cfg.lambda_cache) + "\n";
  out += "lambda_jm=" + util::format_double(cfg.lambda_jm) + "\n";
  out += "models=" + cfg.models + "\n";
  out += "n_forms=" + std::to_string(cfg.n_forms) + "\n";
  out += "order=" + std::to_string(cfg.order) + "\n";
  out += "out_dir=" + cfg.out_dir + "\n";
  out += "per_cell=" + std::to_string(cfg.per_cell) + "\n";
  out += "per_respondent=" + std::to_string(cfg.per_respondent) + "\n";
  out += "ratio=" + util::format_double(cfg.ratio) + "\n";
  out += "roots=" + roots + "\n";
  out += "seed=" + std::to_string(cfg.seed) + "\n";
  out += "survey_model=" + cfg.survey_model + "\n";
  out += "threads=" + std::to_string(cfg.threads) + "\n";
  return out;
}

template <typename F>
void stage(const char* name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    std::cerr << "pipeline: stage '" << name << "' failed: " << e.what() << "\n";
    throw;
  }
}

void run_pipeline(const PipeConfig& cfg) {
  if (cfg.roots.empty()) throw ConfigError("pipeline: no corpus roots configured");
  auto kinds = parse_kinds(cfg.kinds);
  auto model_ids = parse_models(cfg.models);
  auto survey_model = experiment::model_from_name(cfg.survey_model);
  if (!survey_model) throw ConfigError("unknown survey_model '" + cfg.survey_model + "'");
  if (std::find(model_ids.begin(), model_ids.end(), *survey_model) == model_ids.end())
    throw ConfigError("survey_model must be one of the selected models");

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw DataError("cannot create directory " + cfg.out_dir);
  auto path = [&](const char* name) { return (fs::path(cfg.out_dir) / name).string(); };
  util::write_file(path("resolved_config.txt"), resolved_config(cfg));

  bool need_raw = false, need_abs = false;
  for (auto id : model_ids) (experiment::model_abstracted(id) ? need_abs : need_raw) = true;

  corpus::Manifest manifest;
  stage("corpus", [&] {
    corpus::IngestStats st;
    manifest = corpus::ingest(cfg.roots, &st);
    size_t removed = corpus::dedup(manifest);
    corpus::split_by_project(manifest, cfg.ratio, cfg.seed);
    corpus::save_manifest(manifest, path("manifest.tsv"));
    std::cout << "corpus: " << manifest.entries.size() << " files (" << removed
              << " duplicates removed, " << st.skipped_unreadable << " unreadable)\n";
  });

  stage("lm", [&] {
    if (need_raw) {
      auto model =
          train_from_manifest(manifest, corpus::Split::Train, cfg.order, cfg.lambda_jm, false);
      model.save(path("model_raw.bin"));
      std::cout << "lm: raw model vocab " << model.vocab_size() << ", tokens "
                << model.total_tokens() << "\n";
    }
    if (need_abs) {
      auto model =
          train_from_manifest(manifest, corpus::Split::Train, cfg.order, cfg.lambda_jm, true);
      model.save(path("model_abs.bin"));
      std::cout << "lm: abstracted model vocab " << model.vocab_size() << ", tokens "
                << model.total_tokens() << "\n";
    }
  });

  std::vector<experiment::DeltaRecord> deltas;
  stage("experiment", [&] {
    // models come back from disk so a missing or corrupt file fails here
    std::optional<lm::NgramModel> raw, abs;
    if (need_raw) raw = lm::NgramModel::load(path("model_raw.bin"));
    if (need_abs) abs = lm::NgramModel::load(path("model_abs.bin"));
    std::map<std::string, transforms::FindStats> fstats;
    auto records = discover_transforms(manifest, corpus::Split::Test, kinds, cfg.seed,
                                       cfg.dup_threshold, &fstats);
    util::write_file(path("transforms.tsv"), transforms::serialize_records(records));
    experiment::ModelSet ms;
    ms.raw = raw ? &*raw : nullptr;
    ms.abs = abs ? &*abs : nullptr;
    ms.lambda_cache = cfg.lambda_cache;
    auto res = experiment::run_experiment(records, ms, model_ids, cfg.threads);
    for (const auto& e : res.errors) std::cerr << "warn: " << e << "\n";
    util::write_file(path("deltas.tsv"), experiment::serialize_deltas(res.records));
    auto cells = experiment::aggregate(res.records);
    util::write_file(path("table.tsv"), experiment::format_table(cells));
    deltas = std::move(res.records);
    std::cout << "experiment: " << deltas.size() << " delta records, "
              << res.stats.dropped_empty_shared << " dropped\n";
  });

  stage("survey", [&] {
    auto sel = survey::select_pairs(deltas, cfg.per_cell, *survey_model);
    for (const auto& w : sel.warnings) std::cerr << "warn: " << w << "\n";
    util::write_file(path("survey_pairs.tsv"), survey::serialize_pairs(sel.pairs));
    if (sel.pairs.empty()) {
      std::cout << "survey: no eligible pairs, forms skipped\n";
      return;
    }
    int per_r = std::min<int>(cfg.per_respondent, static_cast<int>(sel.pairs.size()));
    if (per_r < cfg.per_respondent)
      std::cerr << "warn: only " << sel.pairs.size() << " pairs, forms shortened to " << per_r
                << " questions\n";
    auto forms = survey::emit_survey(sel.pairs, cfg.n_forms, per_r, cfg.seed);
    std::string forms_dir = path("forms");
    std::error_code fec;
    fs::create_directories(forms_dir, fec);
    if (fec) throw DataError("cannot create directory " + forms_dir);
    for (const auto& f : forms)
      util::write_file((fs::path(forms_dir) / form_file_name(f.form_id)).string(),
                       survey::format_form(f));
    util::write_file((fs::path(forms_dir) / "answer_key.tsv").string(),
                     survey::format_answer_key(forms));
    std::cout << "survey: " << sel.pairs.size() << " pairs, " << forms.size() << " forms\n";
  });

  std::cout << "pipeline complete -> " << cfg.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus experiment toolkit: meaning-preserving transforms scored by n-gram models"};
  app.require_subcommand(1);

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "manifest ingestion, dedup and splitting");
  corpus_cmd->require_subcommand(1);
  {
    static std::vector<std::string> roots;
    static std::string out;
    auto* c = corpus_cmd->add_subcommand("ingest", "walk project roots into a manifest");
    c->add_option("--root", roots, "project root directory (repeatable)")->required();
    c->add_option("--out", out, "manifest output path")->required();
    c->callback([] { run_corpus_ingest(roots, out); });
  }
  {
    static std::string in, out;
    auto* c = corpus_cmd->add_subcommand("dedup", "drop duplicate parentDir/fileName entries");
    c->add_option("--manifest", in, "manifest input path")->required();
    c->add_option("--out", out, "manifest output path")->required();
    c->callback([] { run_corpus_dedup(in, out); });
  }
  {
    static std::string in, out;
    static double ratio = 0.7;
    static uint64_t seed = 0;
    auto* c = corpus_cmd->add_subcommand("split", "assign train/test labels by project");
    c->add_option("--manifest", in, "manifest input path")->required();
    c->add_option("--ratio", ratio, "train fraction of projects (default 0.7)");
    c->add_option("--seed", seed, "split seed");
    c->add_option("--out", out, "manifest output path")->required();
    c->callback([] { run_corpus_split(in, ratio, seed, out); });
  }

  // frontend
  {
    static std::string file;
    auto* f = app.add_subcommand("frontend", "lexer/parser debug dumps");
    f->require_subcommand(1);
    auto* d = f->add_subcommand("dump", "print tokens and expression trees");
    d->add_option("--file", file, "source file")->required();
    d->callback([] { run_frontend_dump(file); });
  }

  // transform
  {
    static std::string manifest, kinds = "all", split = "test", out;
    static uint64_t seed = 0;
    static int dup_threshold = 100;
    auto* t = app.add_subcommand("transform", "meaning-preserving source transforms");
    t->require_subcommand(1);
    auto* r = t->add_subcommand("run", "find and sample transforms over a manifest split");
    r->add_option("--manifest", manifest, "corpus manifest")->required();
    r->add_option("--kind", kinds, "comma-separated kinds or 'all' (default all)");
    r->add_option("--split", split, "train, test or all (default test)");
    r->add_option("--seed", seed, "sampling seed");
    r->add_option("--dup-threshold", dup_threshold,
                  "exclude lines duplicated more than this many times (default 100)");
    r->add_option("--out", out, "records output path")->required();
    r->callback([] { run_transform_run(manifest, kinds, split, seed, dup_threshold, out); });
  }

  // lm
  auto* lm_cmd = app.add_subcommand("lm", "n-gram language models");
  lm_cmd->require_subcommand(1);
  {
    static std::string manifest, split = "train", out;
    static int order = 6;
    static double lambda = 0.5;
    static bool abstracted = false;
    auto* t = lm_cmd->add_subcommand("train", "train a smoothed n-gram model");
    t->add_option("--manifest", manifest, "corpus manifest")->required();
    t->add_option("--split", split, "train, test or all (default train)");
    t->add_option("--order", order, "n-gram order (default 6)");
    t->add_option("--lambda", lambda, "interpolation weight in (0,1) (default 0.5)");
    t->add_flag("--abstracted", abstracted, "abstract identifiers and literals");
    t->add_option("--out", out, "model output path")->required();
    t->callback([] { run_lm_train(manifest, split, order, lambda, abstracted, out); });
  }
  {
    static std::string model, file;
    static bool use_cache = false, per_token = false;
    static double lambda_cache = 0.5;
    auto* s = lm_cmd->add_subcommand("score", "score one file and print surprisal totals");
    s->add_option("--model", model, "model file")->required();
    s->add_option("--file", file, "source file")->required();
    s->add_flag("--cache", use_cache, "blend with a per-file cache model");
    s->add_option("--lambda-cache", lambda_cache, "cache blend weight in [0,1) (default 0.5)");
    s->add_flag("--per-token", per_token, "print one line per token");
    s->callback([] { run_lm_score(model, file, use_cache, lambda_cache, per_token); });
  }

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "score transforms against model variants");
  exp_cmd->require_subcommand(1);
  {
    static ExpOpts o;
    auto* r = exp_cmd->add_subcommand("run", "discover transforms on the test split and score");
    r->add_option("--train-manifest", o.train_manifest,
                  "manifest whose train split trains models (unless model files are given)");
    r->add_option("--test-manifest", o.test_manifest, "manifest whose test split is transformed")
        ->required();
    r->add_option("--global-model", o.global_model, "pre-trained raw model file");
    r->add_option("--abs-model", o.abs_model, "pre-trained abstracted model file");
    r->add_option("--models", o.models, "comma-separated model ids or 'all' (default all)");
    r->add_option("--kinds", o.kinds, "comma-separated kinds or 'all' (default all)");
    r->add_option("--seed", o.seed, "sampling seed");
    r->add_option("--order", o.order, "n-gram order when training here (default 6)");
    r->add_option("--lambda", o.lambda, "interpolation weight (default 0.5)");
    r->add_option("--lambda-cache", o.lambda_cache, "cache blend weight (default 0.5)");
    r->add_option("--dup-threshold", o.dup_threshold, "duplicate-line exclusion threshold");
    r->add_option("--threads", o.threads, "worker threads (default: hardware)");
    r->add_option("--out", o.out, "delta records output path")->required();
    r->callback([] { run_experiment_run(o); });
  }
  {
    static std::string in, out;
    static double alpha = 0.05;
    auto* a = exp_cmd->add_subcommand("aggregate", "per-(kind, model) summary table");
    a->add_option("--in", in, "delta records path")->required();
    a->add_option("--alpha", alpha, "family-wise significance level (default 0.05)");
    a->add_option("--out", out, "table output path (default stdout)");
    a->callback([] { run_experiment_aggregate(in, alpha, out); });
  }

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "statistical analyses over delta records");
  stats_cmd->require_subcommand(1);
  {
    static std::string in, group = "kind,model", out;
    static size_t family = 0;
    static double alpha = 0.05;
    auto* w = stats_cmd->add_subcommand("wilcoxon", "signed-rank tests per group");
    w->add_option("--in", in, "delta records path")->required();
    w->add_option("--group", group, "group fields: kind, model or kind,model (default)");
    w->add_option("--family-size", family, "Bonferroni family size (default: tested groups)");
    w->add_option("--alpha", alpha, "family-wise significance level (default 0.05)");
    w->add_option("--out", out, "table output path (default stdout)");
    w->callback([] { run_stats_wilcoxon(in, group, family, alpha, out); });
  }
  {
    static std::string in, out;
    static size_t min_count = 100;
    auto* o = stats_cmd->add_subcommand("ols", "regress delta on covariates");
    o->add_option("--in", in, "delta records path")->required();
    o->add_option("--min-level-count", min_count,
                  "drop rows whose categorical level is rarer than this (default 100)");
    o->add_option("--out", out, "output path (default stdout)");
    o->callback([] { run_stats_ols(in, min_count, out); });
  }

  // survey
  auto* survey_cmd = app.add_subcommand("survey", "forced-choice survey tooling");
  survey_cmd->require_subcommand(1);
  {
    static std::string in, out, model = "global";
    static int per_cell = 20;
    auto* s = survey_cmd->add_subcommand("select", "pick strongest single-line pairs");
    s->add_option("--in", in, "delta records path")->required();
    s->add_option("--per-cell", per_cell, "pairs per kind and direction (default 20)");
    s->add_option("--model", model, "model whose deltas rank the pairs (default global)");
    s->add_option("--out", out, "pairs output path")->required();
    s->callback([] { run_survey_select(in, per_cell, model, out); });
  }
  {
    static std::string pairs, out_dir = "forms";
    static int n_forms = 1, per_respondent = 80;
    static uint64_t seed = 0;
    auto* e = survey_cmd->add_subcommand("emit", "write shuffled forms plus an answer key");
    e->add_option("--pairs", pairs, "pairs file")->required();
    e->add_option("--n-forms", n_forms, "number of forms (default 1)");
    e->add_option("--per-respondent", per_respondent, "questions per form (default 80)");
    e->add_option("--seed", seed, "shuffle seed");
    e->add_option("--out-dir", out_dir, "output directory (default forms)");
    e->callback([] { run_survey_emit(pairs, n_forms, per_respondent, seed, out_dir); });
  }
  {
    static std::string pairs, responses, out, long_out;
    auto* a = survey_cmd->add_subcommand("analyze", "model-human agreement report");
    a->add_option("--pairs", pairs, "pairs file")->required();
    a->add_option("--responses", responses, "responses file")->required();
    a->add_option("--out", out, "report output path (default stdout)");
    a->add_option("--long-out", long_out, "long-format export path (default <out>.long.tsv)");
    a->callback([] { run_survey_analyze(pairs, responses, out, long_out); });
  }

  // demo
  {
    static std::string dir;
    static int projects = 4, files = 5, methods = 8;
    static uint64_t seed = 1;
    auto* d = app.add_subcommand("demo", "write a deterministic synthetic corpus");
    d->add_option("--dir", dir, "output directory")->required();
    d->add_option("--projects", projects, "project count (default 4)");
    d->add_option("--files", files, "files per project (default 5)");
    d->add_option("--methods", methods, "methods per file (default 8)");
    d->add_option("--seed", seed, "generation seed (default 1)");
    d->callback([] { run_demo(dir, projects, files, methods, seed); });
  }

  // pipeline
  {
    static PipeConfig cfg;
    static std::string config_file, roots_csv;
    auto* p = app.add_subcommand("pipeline", "corpus -> models -> transforms -> report -> survey");
    p->add_option("--config", config_file, "key=value config file; its values override flags");
    p->add_option("--roots", roots_csv, "comma-separated project root directories");
    p->add_option("--out-dir", cfg.out_dir, "artifact directory (default out)");
    p->add_option("--seed", cfg.seed, "global seed");
    p->add_option("--order", cfg.order, "n-gram order (default 6)");
    p->add_option("--lambda-jm", cfg.lambda_jm, "interpolation weight (default 0.5)");
    p->add_option("--lambda-cache", cfg.lambda_cache, "cache blend weight (default 0.5)");
    p->add_option("--dup-threshold", cfg.dup_threshold, "duplicate-line threshold (default 100)");
    p->add_option("--ratio", cfg.ratio, "train fraction of projects (default 0.7)");
    p->add_option("--kinds", cfg.kinds, "transform kinds (default all)");
    p->add_option("--models", cfg.models, "model variants (default all)");
    p->add_option("--survey-model", cfg.survey_model, "model ranking survey pairs");
    p->add_option("--per-cell", cfg.per_cell, "survey pairs per kind and direction");
    p->add_option("--n-forms", cfg.n_forms, "survey forms to emit (default 2)");
    p->add_option("--per-respondent", cfg.per_respondent, "questions per form (default 80)");
    p->add_option("--threads", cfg.threads, "worker threads (default: hardware)");
    p->callback([] {
      if (!roots_csv.empty()) cfg.roots = csv_list(roots_csv);
      if (!config_file.empty()) apply_config_file(cfg, config_file);
      run_pipeline(cfg);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
