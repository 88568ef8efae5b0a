#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "natex/lexer.hpp"

namespace natex::lm {

// Token-text abstraction used by the *_abs model variants: identifiers and
// most literals collapse to placeholder classes so the model sees syntactic
// shape rather than naming.
//   identifier      -> "<id>"
//   int literal     -> kept for "1"/"2"/"3" (and "0" when keep_zero), else "<int>"
//   float literal   -> "<float>"
//   string literal  -> kept when the quoted content is empty or a single
//                      character (a two-char backslash escape counts), else "<str>"
//   anything else   -> unchanged
std::string abstract_token(frontend::TokenCat cat, const std::string& text,
                           bool keep_zero = false);

// Significant token texts of a lexed stream, optionally abstracted.
std::vector<std::string> token_texts(const std::vector<frontend::Token>& toks,
                                     bool abstracted, bool keep_zero = false);

// Interpolated n-gram model over token texts. For a context seen in
// training, P_k = lambda*ML_k + (1-lambda)*P_{k-1}; an unseen context is
// skipped (P_k = P_{k-1}) so total mass stays exactly 1; the base case
// blends the unigram ML with a uniform 1/(vocab+1) floor whose extra slot
// reserves mass for tokens never seen in training.
class NgramModel {
 public:
  NgramModel() : NgramModel(6, 0.5, false) {}
  NgramModel(int order, double lambda, bool abstracted);

  // Training: counts every k-gram (k <= order) of the stream. Streams are
  // independent; no n-gram spans two add_file calls.
  void add_file(const std::vector<std::string>& texts);

  int order() const { return order_; }
  double lambda() const { return lambda_; }
  bool abstracted() const { return abstracted_; }
  uint32_t vocab_size() const { return static_cast<uint32_t>(vocab_.size()); }
  uint64_t total_tokens() const { return total_tokens_; }

  std::optional<uint32_t> lookup(const std::string& text) const;
  const std::string& text_of(uint32_t id) const { return vocab_[id]; }

  // context = up to order-1 ids, last element immediately precedes token.
  // Ids >= vocab_size() stand for out-of-vocabulary tokens and miss every
  // count table, landing on the uniform floor.
  double prob(std::span<const uint32_t> context, uint32_t token) const;
  double surprisal(std::span<const uint32_t> context, uint32_t token) const;

  std::string serialize() const;
  static NgramModel deserialize(const std::string& bytes);  // throws DataError
  void save(const std::string& path) const;
  static NgramModel load(const std::string& path);  // throws DataError

 private:
  struct Cell {
    uint64_t total = 0;
    std::unordered_map<uint32_t, uint64_t> counts;
  };

  uint32_t intern(const std::string& text);
  const Cell* find_cell(int k, std::span<const uint32_t> context) const;

  int order_ = 6;
  double lambda_ = 0.5;
  bool abstracted_ = false;
  uint64_t total_tokens_ = 0;
  std::vector<std::string> vocab_;  // id -> text, first-occurrence order
  std::unordered_map<std::string, uint32_t> ids_;
  // levels_[k-1]: contexts of k-1 tokens, keyed by packed little-endian ids
  std::vector<std::unordered_map<std::string, Cell>> levels_;
};

// File-local counts blended into the global model while one stream is
// scored. The estimate is the maximum-likelihood ratio at the longest
// context length with any observations; a context no level has seen (only
// possible while the cache is empty) contributes probability zero.
class CacheState {
 public:
  explicit CacheState(int order);

  // ML at the longest defined cache context, or nothing if the cache is empty.
  std::optional<double> prob(std::span<const uint32_t> context, uint32_t token) const;
  void add(std::span<const uint32_t> context, uint32_t token);
  bool empty() const { return empty_; }

 private:
  struct Cell {
    uint64_t total = 0;
    std::unordered_map<uint32_t, uint64_t> counts;
  };
  int order_;
  bool empty_ = true;
  std::vector<std::unordered_map<std::string, Cell>> levels_;
};

// Scores texts left to right. With use_cache, each probability becomes
// (1-lambda_cache)*P_global + lambda_cache*P_cache, the cache holding every
// previously scored token of this stream (reset between streams, updated
// after each token). Unknown texts get stream-local ids above vocab_size()
// so repeats of the same unknown text still match in the cache.
std::vector<double> score_stream(const NgramModel& model,
                                 const std::vector<std::string>& texts,
                                 bool use_cache, double lambda_cache);

// Blended probability of one token given explicit ids; exposed for tests.
double blend_prob(const NgramModel& model, const CacheState& cache,
                  std::span<const uint32_t> context, uint32_t token,
                  double lambda_cache);

}  // namespace natex::lm
