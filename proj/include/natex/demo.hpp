#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace natex::demo {

// Deterministic synthetic Java corpus. The generated code follows fixed
// writing conventions (comparisons put the variable first, arithmetic puts
// the literal last, multiplications inside additions are parenthesized about
// half the time), so transform experiments on it recover a planted
// familiarity signal. Methods reuse a small pool of idioms, giving files the
// local repetition a cache model feeds on.
struct DemoSpec {
  int projects = 4;
  int files_per_project = 5;
  int methods_per_file = 8;
  uint64_t seed = 1;
};

// (relative path, file content) pairs, sorted by path. Content depends only
// on the spec.
std::vector<std::pair<std::string, std::string>> generate(const DemoSpec& spec);

// Writes the corpus under dir, one subdirectory per project.
void write_corpus(const std::string& dir, const DemoSpec& spec);

// The per-project directories write_corpus creates; usable as ingest roots.
std::vector<std::string> project_dirs(const std::string& dir, const DemoSpec& spec);

}  // namespace natex::demo
