#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace natex::transforms {

enum class Kind : uint8_t {
  ArithSwap,
  RelSwap,
  ParenAdd,
  ParenRemove,
  ShuffleWithin,
  ShuffleBetween,
};

constexpr std::array<Kind, 6> all_kinds() {
  return {Kind::ArithSwap,  Kind::RelSwap,       Kind::ParenAdd,
          Kind::ParenRemove, Kind::ShuffleWithin, Kind::ShuffleBetween};
}

const char* kind_name(Kind k);
std::optional<Kind> kind_from_name(std::string_view name);

// One byte-range replacement in the original file. Edits of a record never
// overlap and are sorted ascending.
struct Edit {
  size_t begin = 0;
  size_t end = 0;
  std::string replacement;
};

std::string apply_edits(const std::string& original, const std::vector<Edit>& edits);

// One generated variant. The edited region is the whole expression for the
// expression kinds (its byte span in region_begin/region_end) and the set of
// lines mentioning a shuffled name for the shuffle kinds. `lines` lists every
// 1-based line whose tokens take part in line-level scoring; line numbers are
// identical in both file variants because no edit adds or removes newlines.
struct TransformRecord {
  Kind kind = Kind::ArithSwap;
  std::string file;
  std::vector<Edit> edits;
  std::vector<int> lines;
  size_t region_begin = 0;
  size_t region_end = 0;
  std::string original_text;
  std::string transformed_text;
  std::vector<std::string> shared_tokens;  // sorted multiset intersection
  int num_tokens = 0;                      // significant tokens of the region
  std::string parent_kind;                 // node kind above the edited node, or "root"/"method"
  std::string dominant_op;                 // operator of the edited node, or "rename"
};

struct FindStats {
  size_t candidate_locations = 0;
  size_t distinct_variants = 0;
  size_t emitted = 0;
  size_t validation_failures = 0;
  size_t excluded_line_skips = 0;
};

// All variants of one kind for one file. Arithmetic swaps exchange the two
// operands beside one chosen + or * occurrence (numeric operands only, no
// calls or side effects in the expression, chains of three or more operands
// restricted to int/long). Relational swaps mirror the comparison. Paren add
// wraps one proper subexpression (both arms of a structurally symmetric
// boolean chain are wrapped together); paren remove drops pairs whose
// absence leaves the parse identical. Shuffles permute eligible local
// variable names within one method, either inside declared-type groups or
// across all of them. Every variant is validated by re-parsing before it is
// emitted; per-site randomness derives from (seed, path, site index).
// excluded_lines: 1-based flags from the corpus line filter (empty = none);
// any variant touching an excluded line is dropped.
std::vector<TransformRecord> find_transforms(const std::string& path,
                                             const std::string& content, Kind kind,
                                             const std::vector<bool>& excluded_lines,
                                             uint64_t seed,
                                             FindStats* stats = nullptr);

// Line-delimited record storage (tab-separated, escaped fields).
std::string serialize_records(const std::vector<TransformRecord>& records);
std::vector<TransformRecord> parse_records(const std::string& text);  // throws DataError

}  // namespace natex::transforms
