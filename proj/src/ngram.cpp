#include "natex/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "natex/util.hpp"

namespace natex::lm {

namespace {

std::string pack_ids(std::span<const uint32_t> ids) {
  std::string key(ids.size() * 4, '\0');
  for (size_t i = 0; i < ids.size(); ++i) {
    uint32_t v = ids[i];
    key[4 * i + 0] = static_cast<char>(v & 0xff);
    key[4 * i + 1] = static_cast<char>((v >> 8) & 0xff);
    key[4 * i + 2] = static_cast<char>((v >> 16) & 0xff);
    key[4 * i + 3] = static_cast<char>((v >> 24) & 0xff);
  }
  return key;
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw DataError("model file: truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

bool single_char_string(const std::string& text) {
  // text includes the quotes
  if (text.size() < 2 || text.front() != '"' || text.back() != '"') return false;
  size_t inner = text.size() - 2;
  if (inner <= 1) return true;
  return inner == 2 && text[1] == '\\';
}

}  // namespace

std::string abstract_token(frontend::TokenCat cat, const std::string& text,
                           bool keep_zero) {
  using frontend::TokenCat;
  switch (cat) {
    case TokenCat::Identifier:
      return "<id>";
    case TokenCat::IntLit:
      if (text == "1" || text == "2" || text == "3") return text;
      if (keep_zero && text == "0") return text;
      return "<int>";
    case TokenCat::FloatLit:
      return "<float>";
    case TokenCat::StringLit:
      return single_char_string(text) ? text : "<str>";
    default:
      return text;
  }
}

std::vector<std::string> token_texts(const std::vector<frontend::Token>& toks,
                                     bool abstracted, bool keep_zero) {
  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const auto& t : toks) {
    if (!t.significant()) continue;
    out.push_back(abstracted ? abstract_token(t.cat, t.text, keep_zero) : t.text);
  }
  return out;
}

NgramModel::NgramModel(int order, double lambda, bool abstracted)
    : order_(order), lambda_(lambda), abstracted_(abstracted) {
  if (order < 1) throw ConfigError("model order must be at least 1");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("interpolation weight must be strictly between 0 and 1");
  levels_.resize(static_cast<size_t>(order));
}

uint32_t NgramModel::intern(const std::string& text) {
  auto it = ids_.find(text);
  if (it != ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(vocab_.size());
  vocab_.push_back(text);
  ids_.emplace(text, id);
  return id;
}

std::optional<uint32_t> NgramModel::lookup(const std::string& text) const {
  auto it = ids_.find(text);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void NgramModel::add_file(const std::vector<std::string>& texts) {
  std::vector<uint32_t> ids;
  ids.reserve(texts.size());
  for (const auto& t : texts) ids.push_back(intern(t));
  total_tokens_ += ids.size();
  for (size_t i = 0; i < ids.size(); ++i) {
    int kmax = static_cast<int>(std::min<size_t>(order_, i + 1));
    for (int k = 1; k <= kmax; ++k) {
      std::span<const uint32_t> ctx(ids.data() + i - (k - 1), static_cast<size_t>(k - 1));
      Cell& cell = levels_[static_cast<size_t>(k - 1)][pack_ids(ctx)];
      ++cell.total;
      ++cell.counts[ids[i]];
    }
  }
}

const NgramModel::Cell* NgramModel::find_cell(int k, std::span<const uint32_t> context) const {
  const auto& level = levels_[static_cast<size_t>(k - 1)];
  auto it = level.find(pack_ids(context.subspan(context.size() - (k - 1))));
  return it == level.end() ? nullptr : &it->second;
}

double NgramModel::prob(std::span<const uint32_t> context, uint32_t token) const {
  if (context.size() > static_cast<size_t>(order_ - 1))
    context = context.subspan(context.size() - static_cast<size_t>(order_ - 1));
  double floor = 1.0 / (static_cast<double>(vocab_.size()) + 1.0);
  // base: unigram blend with the uniform floor
  double p = floor;
  if (!levels_.empty() && !levels_[0].empty()) {
    const Cell& uni = levels_[0].begin()->second;
    double ml = 0.0;
    auto it = uni.counts.find(token);
    if (it != uni.counts.end()) ml = static_cast<double>(it->second) / static_cast<double>(uni.total);
    p = lambda_ * ml + (1.0 - lambda_) * floor;
  }
  int kmax = static_cast<int>(context.size()) + 1;
  for (int k = 2; k <= kmax; ++k) {
    const Cell* cell = find_cell(k, context);
    if (!cell || cell->total == 0) continue;  // unseen context: keep shorter estimate
    double ml = 0.0;
    auto it = cell->counts.find(token);
    if (it != cell->counts.end()) ml = static_cast<double>(it->second) / static_cast<double>(cell->total);
    p = lambda_ * ml + (1.0 - lambda_) * p;
  }
  return p;
}

double NgramModel::surprisal(std::span<const uint32_t> context, uint32_t token) const {
  return -std::log2(prob(context, token));
}

std::string NgramModel::serialize() const {
  std::string out;
  out += "NXLM";
  put_u32(out, 1);  // version
  put_u32(out, static_cast<uint32_t>(order_));
  uint64_t lam_bits;
  static_assert(sizeof lam_bits == sizeof lambda_);
  std::memcpy(&lam_bits, &lambda_, 8);
  put_u64(out, lam_bits);
  out.push_back(abstracted_ ? 1 : 0);
  put_u64(out, total_tokens_);
  put_u32(out, static_cast<uint32_t>(vocab_.size()));
  for (const auto& text : vocab_) {
    put_u32(out, static_cast<uint32_t>(text.size()));
    out += text;
  }
  for (int k = 1; k <= order_; ++k) {
    const auto& level = levels_[static_cast<size_t>(k - 1)];
    std::vector<const std::pair<const std::string, Cell>*> cells;
    cells.reserve(level.size());
    for (const auto& kv : level) cells.push_back(&kv);
    std::sort(cells.begin(), cells.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    put_u64(out, cells.size());
    for (const auto* kv : cells) {
      out += kv->first;  // fixed 4*(k-1) bytes
      put_u64(out, kv->second.total);
      std::vector<std::pair<uint32_t, uint64_t>> pairs(kv->second.counts.begin(),
                                                       kv->second.counts.end());
      std::sort(pairs.begin(), pairs.end());
      put_u32(out, static_cast<uint32_t>(pairs.size()));
      for (const auto& [tok, count] : pairs) {
        put_u32(out, tok);
        put_u64(out, count);
      }
    }
  }
  return out;
}

NgramModel NgramModel::deserialize(const std::string& bytes) {
  ByteReader r{bytes};
  if (r.bytes(4) != "NXLM") throw DataError("model file: bad magic");
  uint32_t version = r.u32();
  if (version != 1) throw DataError("model file: unsupported version " + std::to_string(version));
  uint32_t order = r.u32();
  if (order < 1 || order > 64) throw DataError("model file: implausible order");
  uint64_t lam_bits = r.u64();
  double lambda;
  std::memcpy(&lambda, &lam_bits, 8);
  r.need(1);
  bool abstracted = bytes[r.pos++] != 0;
  NgramModel m(static_cast<int>(order), lambda, abstracted);
  m.total_tokens_ = r.u64();
  uint32_t vocab_size = r.u32();
  m.vocab_.reserve(vocab_size);
  for (uint32_t i = 0; i < vocab_size; ++i) {
    uint32_t len = r.u32();
    std::string text = r.bytes(len);
    m.ids_.emplace(text, i);
    m.vocab_.push_back(std::move(text));
  }
  for (uint32_t k = 1; k <= order; ++k) {
    uint64_t n_cells = r.u64();
    auto& level = m.levels_[k - 1];
    level.reserve(static_cast<size_t>(n_cells));
    for (uint64_t c = 0; c < n_cells; ++c) {
      std::string key = r.bytes(4 * (k - 1));
      Cell cell;
      cell.total = r.u64();
      uint32_t n_pairs = r.u32();
      cell.counts.reserve(n_pairs);
      for (uint32_t p = 0; p < n_pairs; ++p) {
        uint32_t tok = r.u32();
        cell.counts[tok] = r.u64();
      }
      level.emplace(std::move(key), std::move(cell));
    }
  }
  if (r.pos != bytes.size()) throw DataError("model file: trailing bytes");
  return m;
}

void NgramModel::save(const std::string& path) const {
  util::write_file(path, serialize());
}

NgramModel NgramModel::load(const std::string& path) {
  return deserialize(util::read_file(path));
}

CacheState::CacheState(int order) : order_(order) {
  if (order < 1) throw ConfigError("cache order must be at least 1");
  levels_.resize(static_cast<size_t>(order));
}

std::optional<double> CacheState::prob(std::span<const uint32_t> context,
                                       uint32_t token) const {
  if (empty_) return std::nullopt;
  if (context.size() > static_cast<size_t>(order_ - 1))
    context = context.subspan(context.size() - static_cast<size_t>(order_ - 1));
  for (int k = static_cast<int>(context.size()) + 1; k >= 1; --k) {
    const auto& level = levels_[static_cast<size_t>(k - 1)];
    auto it = level.find(pack_ids(context.subspan(context.size() - (k - 1))));
    if (it == level.end() || it->second.total == 0) continue;
    auto ct = it->second.counts.find(token);
    uint64_t n = ct == it->second.counts.end() ? 0 : ct->second;
    return static_cast<double>(n) / static_cast<double>(it->second.total);
  }
  return std::nullopt;  // unreachable once any token was added (unigram level)
}

void CacheState::add(std::span<const uint32_t> context, uint32_t token) {
  if (context.size() > static_cast<size_t>(order_ - 1))
    context = context.subspan(context.size() - static_cast<size_t>(order_ - 1));
  for (int k = 1; k <= static_cast<int>(context.size()) + 1; ++k) {
    Cell& cell =
        levels_[static_cast<size_t>(k - 1)][pack_ids(context.subspan(context.size() - (k - 1)))];
    ++cell.total;
    ++cell.counts[token];
  }
  empty_ = false;
}

double blend_prob(const NgramModel& model, const CacheState& cache,
                  std::span<const uint32_t> context, uint32_t token,
                  double lambda_cache) {
  double pg = model.prob(context, token);
  double pc = cache.prob(context, token).value_or(0.0);
  return (1.0 - lambda_cache) * pg + lambda_cache * pc;
}

std::vector<double> score_stream(const NgramModel& model,
                                 const std::vector<std::string>& texts,
                                 bool use_cache, double lambda_cache) {
  if (use_cache && !(lambda_cache >= 0.0 && lambda_cache < 1.0))
    throw ConfigError("cache weight must be in [0, 1)");
  std::vector<uint32_t> ids;
  ids.reserve(texts.size());
  std::unordered_map<std::string, uint32_t> oov;
  for (const auto& t : texts) {
    auto known = model.lookup(t);
    if (known) {
      ids.push_back(*known);
    } else {
      auto [it, fresh] = oov.emplace(t, model.vocab_size() + static_cast<uint32_t>(oov.size()));
      (void)fresh;
      ids.push_back(it->second);
    }
  }
  std::vector<double> out;
  out.reserve(ids.size());
  CacheState cache(model.order());
  size_t ctx_max = static_cast<size_t>(model.order() - 1);
  for (size_t i = 0; i < ids.size(); ++i) {
    size_t ctx_len = std::min(ctx_max, i);
    std::span<const uint32_t> ctx(ids.data() + i - ctx_len, ctx_len);
    double p;
    if (use_cache) {
      p = blend_prob(model, cache, ctx, ids[i], lambda_cache);
      cache.add(ctx, ids[i]);
    } else {
      p = model.prob(ctx, ids[i]);
    }
    out.push_back(-std::log2(p));
  }
  return out;
}

}  // namespace natex::lm
