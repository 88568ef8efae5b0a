#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natex/ngram.hpp"
#include "natex/transforms.hpp"

namespace natex::experiment {

// Model variants scored against every transform. Cached variants mix the
// global n-gram estimate with a per-file cache; abstracted variants score the
// abstracted token stream of both file versions.
enum class ModelId { Global, Cache, GlobalAbs, CacheAbs };

const char* model_name(ModelId id);
std::optional<ModelId> model_from_name(std::string_view name);
std::vector<ModelId> all_models();
bool model_abstracted(ModelId id);
bool model_cached(ModelId id);

// One scored (transform x model) pair. delta = mean_surprisal_original -
// mean_surprisal_transformed over the shared tokens of the edited region, so
// delta < 0 means the model found the original form more probable. line_*
// repeats the computation over whole-line shared tokens (every significant
// token on the affected lines, intersected as a multiset). Shuffle kinds have
// no sub-line region, so their region scope equals the line scope.
struct DeltaRecord {
  ModelId model = ModelId::Global;
  transforms::Kind kind = transforms::Kind::ArithSwap;
  std::string file;
  size_t region_begin = 0;
  size_t region_end = 0;
  double mean_surprisal_original = 0.0;
  double mean_surprisal_transformed = 0.0;
  double delta = 0.0;
  double line_mean_original = 0.0;
  double line_mean_transformed = 0.0;
  double line_delta = 0.0;
  int shared_count = 0;
  int line_shared_count = 0;
  // covariates copied from the transform record
  int num_tokens = 0;
  int n_lines = 0;
  std::string parent_kind;
  std::string dominant_op;
  // set only for single-line records: the trimmed line in each version
  std::string original_line;
  std::string transformed_line;
};

// Models used for scoring. raw serves global/cache, abs serves the *_abs
// variants; each may be null if no requested ModelId needs it.
struct ModelSet {
  const lm::NgramModel* raw = nullptr;
  const lm::NgramModel* abs = nullptr;
  double lambda_cache = 0.5;
};

struct RunStats {
  int files = 0;
  int failed_files = 0;
  int records_in = 0;
  int records_out = 0;
  int dropped_empty_shared = 0;
};

// Scores all transform records of one file (content is the original file
// text) against every requested model. Records whose shared set matches no
// token occurrence are dropped and counted.
std::vector<DeltaRecord> score_file(const std::string& content,
                                    const std::vector<transforms::TransformRecord>& records,
                                    const ModelSet& models,
                                    const std::vector<ModelId>& which,
                                    RunStats* stats = nullptr);

// Groups records by file, loads each file, and scores the groups in parallel
// (threads <= 0 picks the hardware count). Per-file failures are reported in
// errors and the run continues. Output is grouped by file in first-appearance
// order; within a file the input record order is preserved.
struct RunResult {
  std::vector<DeltaRecord> records;
  RunStats stats;
  std::vector<std::string> errors;
};
RunResult run_experiment(const std::vector<transforms::TransformRecord>& records,
                         const ModelSet& models, const std::vector<ModelId>& which,
                         int threads = 0);

std::string serialize_deltas(const std::vector<DeltaRecord>& records);
std::vector<DeltaRecord> parse_deltas(const std::string& text);  // throws DataError

// Per-(kind, model) cell of the aggregate table. Cells with fewer than two
// records carry na = true and only n is meaningful. The confidence interval
// is Bonferroni-adjusted across all testable cells of the table.
struct CellSummary {
  transforms::Kind kind = transforms::Kind::ArithSwap;
  ModelId model = ModelId::Global;
  int n = 0;
  bool na = true;
  double median_delta = 0.0;
  double pseudomedian = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

std::vector<CellSummary> aggregate(const std::vector<DeltaRecord>& records,
                                   double alpha = 0.05);
std::string format_table(const std::vector<CellSummary>& cells);

}  // namespace natex::experiment
