#include "natex/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <map>
#include <set>
#include <span>
#include <thread>
#include <utility>

#include "natex/lexer.hpp"
#include "natex/stats.hpp"
#include "natex/util.hpp"

namespace natex::experiment {

const char* model_name(ModelId id) {
  switch (id) {
    case ModelId::Global: return "global";
    case ModelId::Cache: return "cache";
    case ModelId::GlobalAbs: return "global_abs";
    case ModelId::CacheAbs: return "cache_abs";
  }
  return "?";
}

std::optional<ModelId> model_from_name(std::string_view name) {
  for (ModelId id : all_models())
    if (name == model_name(id)) return id;
  return std::nullopt;
}

std::vector<ModelId> all_models() {
  return {ModelId::Global, ModelId::Cache, ModelId::GlobalAbs, ModelId::CacheAbs};
}

bool model_abstracted(ModelId id) {
  return id == ModelId::GlobalAbs || id == ModelId::CacheAbs;
}

bool model_cached(ModelId id) {
  return id == ModelId::Cache || id == ModelId::CacheAbs;
}

namespace {

using transforms::TransformRecord;

constexpr size_t midx(ModelId id) { return static_cast<size_t>(id); }

// Significant tokens of one file version, as parallel arrays.
struct Variant {
  std::vector<size_t> offs;
  std::vector<int> lines;
  std::vector<std::string> raw;
  std::vector<std::string> abs;
};

Variant make_variant(const std::string& content, bool need_abs) {
  frontend::LexError err;
  auto toks = frontend::tokenize(content, &err);
  if (!toks) throw DataError("tokenize failed at line " + std::to_string(err.line) + ": " + err.message);
  Variant v;
  for (const auto& t : *toks) {
    if (!t.significant()) continue;
    v.offs.push_back(t.offset);
    v.lines.push_back(t.line);
    v.raw.push_back(t.text);
    if (need_abs) v.abs.push_back(lm::abstract_token(t.cat, t.text));
  }
  return v;
}

const lm::NgramModel* model_for(const ModelSet& models, ModelId id) {
  return model_abstracted(id) ? models.abs : models.raw;
}

const std::vector<std::string>& texts_for(const Variant& v, ModelId id) {
  return model_abstracted(id) ? v.abs : v.raw;
}

void check_models(const ModelSet& models, const std::vector<ModelId>& which) {
  if (which.empty()) throw ConfigError("no models requested");
  for (ModelId id : which)
    if (model_for(models, id) == nullptr)
      throw ConfigError(std::string("model '") + model_name(id) + "' requested but not provided");
}

// Surprisal of texts[i] under the plain global model, identical to the value
// score_stream would produce at that position: ids at or above vocab_size()
// miss every count table no matter which unused id stands in for them.
double global_surprisal_at(const lm::NgramModel& m, const std::vector<std::string>& texts, size_t i) {
  size_t ctx_len = std::min(i, static_cast<size_t>(m.order() - 1));
  std::vector<uint32_t> ids(ctx_len);
  for (size_t j = 0; j < ctx_len; ++j)
    ids[j] = m.lookup(texts[i - ctx_len + j]).value_or(m.vocab_size());
  uint32_t tok = m.lookup(texts[i]).value_or(m.vocab_size());
  return m.surprisal(std::span<const uint32_t>(ids.data(), ids.size()), tok);
}

// Indices of significant tokens starting inside [begin, end).
std::vector<int> span_indices(const Variant& v, size_t begin, size_t end) {
  auto lo = std::lower_bound(v.offs.begin(), v.offs.end(), begin);
  auto hi = std::lower_bound(v.offs.begin(), v.offs.end(), end);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(hi - lo));
  for (auto it = lo; it != hi; ++it)
    out.push_back(static_cast<int>(it - v.offs.begin()));
  return out;
}

std::vector<int> line_indices(const Variant& v, const std::set<int>& lines) {
  std::vector<int> out;
  for (size_t i = 0; i < v.lines.size(); ++i)
    if (lines.count(v.lines[i])) out.push_back(static_cast<int>(i));
  return out;
}

// Pairs the j-th original occurrence of each token text with the j-th
// transformed occurrence, both in textual order, up to the multiset
// intersection (optionally capped by the transform's own shared multiset).
std::vector<std::pair<int, int>> match_occurrences(const Variant& o, const std::vector<int>& oi,
                                                   const Variant& t, const std::vector<int>& ti,
                                                   const std::map<std::string, int>* cap) {
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> occ;
  for (int i : oi) occ[o.raw[static_cast<size_t>(i)]].first.push_back(i);
  for (int i : ti) occ[t.raw[static_cast<size_t>(i)]].second.push_back(i);
  std::vector<std::pair<int, int>> pairs;
  for (auto& [text, two] : occ) {
    size_t k = std::min(two.first.size(), two.second.size());
    if (cap) {
      auto it = cap->find(text);
      k = std::min(k, static_cast<size_t>(it == cap->end() ? 0 : it->second));
    }
    for (size_t j = 0; j < k; ++j) pairs.emplace_back(two.first[j], two.second[j]);
  }
  return pairs;
}

std::string trim_ws(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string line_text(const std::string& content, int line_no) {
  int cur = 1;
  size_t start = 0;
  for (size_t i = 0; i <= content.size(); ++i) {
    if (i == content.size() || content[i] == '\n') {
      if (cur == line_no) return trim_ws(std::string_view(content).substr(start, i - start));
      ++cur;
      start = i + 1;
    }
  }
  return "";
}

std::vector<DeltaRecord> score_group(const std::string& content,
                                     const std::vector<const TransformRecord*>& records,
                                     const ModelSet& models, const std::vector<ModelId>& which,
                                     RunStats* stats) {
  check_models(models, which);
  bool need_abs = std::any_of(which.begin(), which.end(), model_abstracted);
  Variant orig = make_variant(content, need_abs);

  // the original stream is scored once per model and reused for every record
  std::array<std::vector<double>, 4> orig_full;
  for (ModelId id : which)
    orig_full[midx(id)] = lm::score_stream(*model_for(models, id), texts_for(orig, id),
                                           model_cached(id), models.lambda_cache);

  std::vector<DeltaRecord> out;
  for (const TransformRecord* recp : records) {
    const TransformRecord& rec = *recp;
    if (stats) stats->records_in++;

    std::string t_content = transforms::apply_edits(content, rec.edits);
    Variant trans = make_variant(t_content, need_abs);

    std::set<int> line_set(rec.lines.begin(), rec.lines.end());
    auto pairs_line = match_occurrences(orig, line_indices(orig, line_set),
                                        trans, line_indices(trans, line_set), nullptr);

    bool is_shuffle = rec.kind == transforms::Kind::ShuffleWithin ||
                      rec.kind == transforms::Kind::ShuffleBetween;
    std::vector<std::pair<int, int>> pairs_region;
    if (is_shuffle) {
      pairs_region = pairs_line;
    } else {
      ptrdiff_t shift = 0;
      for (const auto& e : rec.edits)
        shift += static_cast<ptrdiff_t>(e.replacement.size()) -
                 static_cast<ptrdiff_t>(e.end - e.begin);
      size_t t_end = static_cast<size_t>(static_cast<ptrdiff_t>(rec.region_end) + shift);
      std::map<std::string, int> cap;
      for (const auto& s : rec.shared_tokens) cap[s]++;
      pairs_region = match_occurrences(orig, span_indices(orig, rec.region_begin, rec.region_end),
                                       trans, span_indices(trans, rec.region_begin, t_end), &cap);
    }

    if (pairs_region.empty() || pairs_line.empty()) {
      if (stats) stats->dropped_empty_shared++;
      continue;
    }

    for (ModelId id : which) {
      const lm::NgramModel& m = *model_for(models, id);
      const std::vector<std::string>& t_texts = texts_for(trans, id);
      const std::vector<double>& o_full = orig_full[midx(id)];
      std::vector<double> t_full;
      if (model_cached(id)) t_full = lm::score_stream(m, t_texts, true, models.lambda_cache);

      auto t_at = [&](int i) {
        return model_cached(id) ? t_full[static_cast<size_t>(i)]
                                : global_surprisal_at(m, t_texts, static_cast<size_t>(i));
      };
      auto means = [&](const std::vector<std::pair<int, int>>& pairs) {
        double so = 0.0, st = 0.0;
        for (auto [oi, ti] : pairs) {
          so += o_full[static_cast<size_t>(oi)];
          st += t_at(ti);
        }
        double n = static_cast<double>(pairs.size());
        return std::pair<double, double>(so / n, st / n);
      };

      DeltaRecord d;
      d.model = id;
      d.kind = rec.kind;
      d.file = rec.file;
      d.region_begin = rec.region_begin;
      d.region_end = rec.region_end;
      auto [lo, lt] = means(pairs_line);
      d.line_mean_original = lo;
      d.line_mean_transformed = lt;
      d.line_delta = lo - lt;
      if (is_shuffle) {
        d.mean_surprisal_original = lo;
        d.mean_surprisal_transformed = lt;
        d.delta = d.line_delta;
      } else {
        auto [ro, rt] = means(pairs_region);
        d.mean_surprisal_original = ro;
        d.mean_surprisal_transformed = rt;
        d.delta = ro - rt;
      }
      d.shared_count = is_shuffle ? static_cast<int>(pairs_line.size())
                                  : static_cast<int>(pairs_region.size());
      d.line_shared_count = static_cast<int>(pairs_line.size());
      d.num_tokens = rec.num_tokens;
      d.n_lines = static_cast<int>(rec.lines.size());
      d.parent_kind = rec.parent_kind;
      d.dominant_op = rec.dominant_op;
      if (rec.lines.size() == 1) {
        d.original_line = line_text(content, rec.lines[0]);
        d.transformed_line = line_text(t_content, rec.lines[0]);
      }
      out.push_back(std::move(d));
      if (stats) stats->records_out++;
    }
  }
  return out;
}

}  // namespace

std::vector<DeltaRecord> score_file(const std::string& content,
                                    const std::vector<TransformRecord>& records,
                                    const ModelSet& models, const std::vector<ModelId>& which,
                                    RunStats* stats) {
  std::vector<const TransformRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  return score_group(content, ptrs, models, which, stats);
}

RunResult run_experiment(const std::vector<TransformRecord>& records, const ModelSet& models,
                         const std::vector<ModelId>& which, int threads) {
  check_models(models, which);

  // group by file, first-appearance order
  std::vector<std::string> files;
  std::vector<std::vector<const TransformRecord*>> groups;
  std::map<std::string, size_t> file_slot;
  for (const auto& r : records) {
    auto [it, fresh] = file_slot.try_emplace(r.file, files.size());
    if (fresh) {
      files.push_back(r.file);
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }

  RunResult res;
  res.stats.files = static_cast<int>(files.size());
  std::vector<std::vector<DeltaRecord>> slots(files.size());
  std::vector<RunStats> substats(files.size());
  std::vector<std::string> errors(files.size());

  auto work_one = [&](size_t gi) {
    try {
      std::string content = util::read_file(files[gi]);
      slots[gi] = score_group(content, groups[gi], models, which, &substats[gi]);
    } catch (const std::exception& e) {
      errors[gi] = files[gi] + ": " + e.what();
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  size_t n_threads = threads > 0 ? static_cast<size_t>(threads) : (hw ? hw : 1);
  n_threads = std::min(n_threads, files.size());
  if (n_threads <= 1) {
    for (size_t gi = 0; gi < files.size(); ++gi) work_one(gi);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (size_t gi = next.fetch_add(1); gi < files.size(); gi = next.fetch_add(1)) work_one(gi);
      });
    for (auto& th : pool) th.join();
  }

  for (size_t gi = 0; gi < files.size(); ++gi) {
    if (!errors[gi].empty()) {
      res.stats.failed_files++;
      res.errors.push_back(errors[gi]);
      continue;
    }
    res.stats.records_in += substats[gi].records_in;
    res.stats.records_out += substats[gi].records_out;
    res.stats.dropped_empty_shared += substats[gi].dropped_empty_shared;
    for (auto& d : slots[gi]) res.records.push_back(std::move(d));
  }
  return res;
}

std::string serialize_deltas(const std::vector<DeltaRecord>& records) {
  std::string out = "#deltas\tv1\n";
  for (const auto& d : records) {
    out += model_name(d.model);
    out += '\t';
    out += transforms::kind_name(d.kind);
    out += '\t';
    out += util::tsv_escape(d.file);
    out += '\t';
    out += std::to_string(d.region_begin);
    out += '\t';
    out += std::to_string(d.region_end);
    out += '\t';
    out += util::format_double(d.mean_surprisal_original);
    out += '\t';
    out += util::format_double(d.mean_surprisal_transformed);
    out += '\t';
    out += util::format_double(d.delta);
    out += '\t';
    out += util::format_double(d.line_mean_original);
    out += '\t';
    out += util::format_double(d.line_mean_transformed);
    out += '\t';
    out += util::format_double(d.line_delta);
    out += '\t';
    out += std::to_string(d.shared_count);
    out += '\t';
    out += std::to_string(d.line_shared_count);
    out += '\t';
    out += std::to_string(d.num_tokens);
    out += '\t';
    out += std::to_string(d.n_lines);
    out += '\t';
    out += util::tsv_escape(d.parent_kind);
    out += '\t';
    out += util::tsv_escape(d.dominant_op);
    out += '\t';
    out += util::tsv_escape(d.original_line);
    out += '\t';
    out += util::tsv_escape(d.transformed_line);
    out += '\n';
  }
  return out;
}

namespace {

size_t parse_size(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw DataError("");
    return static_cast<size_t>(v);
  } catch (const std::exception&) {
    throw DataError(std::string("bad ") + what + " in deltas file: '" + s + "'");
  }
}

int parse_int(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw DataError("");
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad ") + what + " in deltas file: '" + s + "'");
  }
}

double parse_dbl(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw DataError("");
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad ") + what + " in deltas file: '" + s + "'");
  }
}

}  // namespace

std::vector<DeltaRecord> parse_deltas(const std::string& text) {
  auto lines = util::split_lines(text);
  if (lines.empty() || lines[0] != "#deltas\tv1")
    throw DataError("deltas file missing '#deltas\tv1' header");
  std::vector<DeltaRecord> out;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    auto f = util::split(lines[li], '\t');
    if (f.size() != 19)
      throw DataError("deltas line " + std::to_string(li + 1) + ": expected 19 fields, got " +
                      std::to_string(f.size()));
    DeltaRecord d;
    auto mid = model_from_name(f[0]);
    if (!mid) throw DataError("unknown model '" + f[0] + "' in deltas file");
    d.model = *mid;
    auto kid = transforms::kind_from_name(f[1]);
    if (!kid) throw DataError("unknown transform kind '" + f[1] + "' in deltas file");
    d.kind = *kid;
    d.file = util::tsv_unescape(f[2]);
    d.region_begin = parse_size(f[3], "region_begin");
    d.region_end = parse_size(f[4], "region_end");
    d.mean_surprisal_original = parse_dbl(f[5], "mean_surprisal_original");
    d.mean_surprisal_transformed = parse_dbl(f[6], "mean_surprisal_transformed");
    d.delta = parse_dbl(f[7], "delta");
    d.line_mean_original = parse_dbl(f[8], "line_mean_original");
    d.line_mean_transformed = parse_dbl(f[9], "line_mean_transformed");
    d.line_delta = parse_dbl(f[10], "line_delta");
    d.shared_count = parse_int(f[11], "shared_count");
    d.line_shared_count = parse_int(f[12], "line_shared_count");
    d.num_tokens = parse_int(f[13], "num_tokens");
    d.n_lines = parse_int(f[14], "n_lines");
    d.parent_kind = util::tsv_unescape(f[15]);
    d.dominant_op = util::tsv_unescape(f[16]);
    d.original_line = util::tsv_unescape(f[17]);
    d.transformed_line = util::tsv_unescape(f[18]);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CellSummary> aggregate(const std::vector<DeltaRecord>& records, double alpha) {
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (const auto& d : records)
    cells[{static_cast<int>(d.kind), static_cast<int>(d.model)}].push_back(d.delta);

  size_t family = 0;
  for (const auto& [key, deltas] : cells)
    if (deltas.size() >= 2) family++;

  std::vector<CellSummary> out;
  for (transforms::Kind kind : transforms::all_kinds()) {
    for (ModelId model : all_models()) {
      auto it = cells.find({static_cast<int>(kind), static_cast<int>(model)});
      if (it == cells.end()) continue;
      CellSummary c;
      c.kind = kind;
      c.model = model;
      c.n = static_cast<int>(it->second.size());
      if (c.n >= 2) {
        auto w = stats::wilcoxon_signed_rank(it->second, alpha, family);
        c.na = false;
        c.median_delta = stats::median_of(it->second);
        c.pseudomedian = w.pseudomedian;
        c.p_value = w.p_two_sided;
        c.ci_low = w.ci_low;
        c.ci_high = w.ci_high;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::string format_table(const std::vector<CellSummary>& cells) {
  std::string out = "kind\tmodel\tn\tmedian_delta\tpseudomedian\tp_value\tci_low\tci_high\n";
  for (const auto& c : cells) {
    out += transforms::kind_name(c.kind);
    out += '\t';
    out += model_name(c.model);
    out += '\t';
    out += std::to_string(c.n);
    if (c.na) {
      out += "\tNA\tNA\tNA\tNA\tNA\n";
      continue;
    }
    out += '\t';
    out += util::format_double(c.median_delta);
    out += '\t';
    out += util::format_double(c.pseudomedian);
    out += '\t';
    out += util::format_double(c.p_value);
    out += '\t';
    out += util::format_double(c.ci_low);
    out += '\t';
    out += util::format_double(c.ci_high);
    out += '\n';
  }
  return out;
}

}  // namespace natex::experiment
