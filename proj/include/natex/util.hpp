#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace natex {

// Bad flags, bad config files, nonsense parameter values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed inputs (corpora, manifests, model files, records).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace util {

// --- deterministic hashing / seed derivation ------------------------------

uint64_t fnv1a(std::string_view s);
uint64_t splitmix64(uint64_t x);

// Every random draw in the pipeline comes from a seed derived as
// hash(global_seed, stream label, index); no global RNG state is shared.
uint64_t derive_seed(uint64_t global_seed, std::string_view label, uint64_t index);

// mt19937_64 is fully specified by the standard, so sequences are portable.
// The bounded draw and shuffle are hand-rolled because std::shuffle and the
// distribution classes are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // unbiased integer in [0, n)
  uint64_t below(uint64_t n);

  double unit();  // [0, 1)

  // standard normal via Box-Muller, deterministic
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// --- strings ---------------------------------------------------------------

std::string trim(std::string_view s);
// collapse runs of whitespace to single spaces and trim the ends
std::string collapse_ws(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool contains(std::string_view hay, std::string_view needle);
bool ends_with(std::string_view s, std::string_view suffix);

// TSV field escaping: backslash, tab, newline, carriage return
std::string tsv_escape(std::string_view s);
std::string tsv_unescape(std::string_view s);

std::string format_double(double v);  // round-trippable, locale-free

// --- io ----------------------------------------------------------------------

std::string read_file(const std::string& path);          // throws DataError
void write_file(const std::string& path, std::string_view content);
std::vector<std::string> split_lines(std::string_view content);

// --- parallelism ----------------------------------------------------------

// Applies fn to indices [0, n) on `threads` workers; results keep index order.
// fn must not touch shared mutable state.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

}  // namespace util
}  // namespace natex
