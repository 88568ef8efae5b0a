#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace natex::corpus {

enum class Split : uint8_t { Unassigned, Train, Test };

const char* split_name(Split s);

struct FileEntry {
  std::string path;       // absolute or root-relative, unique
  std::string project;    // name of the root directory it came from
  std::string dedup_key;  // "parentDir/fileName"
  Split split = Split::Unassigned;
};

struct Manifest {
  std::vector<FileEntry> entries;
  uint64_t split_seed = 0;
  double split_ratio = 0.0;
  bool split_done = false;

  std::vector<const FileEntry*> files(Split s) const;
};

struct IngestStats {
  size_t files = 0;
  size_t skipped_unreadable = 0;
};

// Walks each root recursively collecting *.java files. project = root
// basename. Entries come out sorted lexicographically by path, so "first
// seen" is well defined for dedup. Unreadable roots throw; unreadable files
// are skipped and counted.
Manifest ingest(const std::vector<std::string>& roots, IngestStats* stats = nullptr);

// Keeps the lexicographically first path per dedup_key. Idempotent.
// Returns the number of removed entries.
size_t dedup(Manifest& m);

// Assigns whole projects to train/test: distinct projects are shuffled with
// the seed and the first ceil(ratio * P) become train. Requires at least two
// projects and ratio in (0, 1).
void split_by_project(Manifest& m, double ratio, uint64_t seed);

// Manifest persistence: a header line carrying split metadata followed by
// one tab-separated record per file.
std::string serialize(const Manifest& m);
Manifest parse_manifest(const std::string& text);  // throws DataError
void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

// Test-line filter. Lines are counted across the given file contents after
// whitespace normalization (trim + collapse runs); a line is excluded when
// its normalized form appears more than `threshold` times, or when the raw
// text contains "hashCode" or "other" (case-sensitive). Excluded lines
// produce no transform sites and no scored tokens.
class LineFilter {
 public:
  LineFilter(int threshold) : threshold_(threshold) {}

  // first pass: feed every test-split file
  void count_file(const std::string& content);

  // second pass: which 1-based lines of this file are excluded
  std::vector<bool> excluded_lines(const std::string& content) const;

  static std::string normalize_line(const std::string& line);

 private:
  int threshold_;
  std::unordered_map<std::string, int> counts_;
};

}  // namespace natex::corpus
