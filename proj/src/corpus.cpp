#include "natex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "natex/util.hpp"

namespace fs = std::filesystem;

namespace natex::corpus {

const char* split_name(Split s) {
  switch (s) {
    case Split::Unassigned: return "-";
    case Split::Train: return "train";
    case Split::Test: return "test";
  }
  return "?";
}

std::vector<const FileEntry*> Manifest::files(Split s) const {
  std::vector<const FileEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

Manifest ingest(const std::vector<std::string>& roots, IngestStats* stats) {
  if (roots.empty()) throw ConfigError("ingest: no corpus roots given");
  Manifest m;
  IngestStats local;
  for (const auto& root : roots) {
    fs::path rp(root);
    std::error_code ec;
    if (!fs::is_directory(rp, ec) || ec)
      throw DataError("ingest: not a readable directory: " + root);
    std::string project = rp.filename().string();
    if (project.empty()) project = rp.parent_path().filename().string();
    fs::recursive_directory_iterator it(rp, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw DataError("ingest: cannot walk " + root + ": " + ec.message());
    for (const auto& de : it) {
      if (!de.is_regular_file(ec) || ec) continue;
      const fs::path& p = de.path();
      if (p.extension() != ".java") continue;
      std::ifstream probe(p, std::ios::binary);
      if (!probe) {
        ++local.skipped_unreadable;
        continue;
      }
      FileEntry e;
      e.path = p.string();
      e.project = project;
      e.dedup_key = p.parent_path().filename().string() + "/" + p.filename().string();
      m.entries.push_back(std::move(e));
      ++local.files;
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });
  if (stats) *stats = local;
  return m;
}

size_t dedup(Manifest& m) {
  std::unordered_set<std::string> seen;
  size_t before = m.entries.size();
  std::vector<FileEntry> kept;
  kept.reserve(before);
  // entries are path-sorted, so first seen is lexicographically first
  for (auto& e : m.entries) {
    if (seen.insert(e.dedup_key).second) kept.push_back(std::move(e));
  }
  m.entries = std::move(kept);
  return before - m.entries.size();
}

void split_by_project(Manifest& m, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split: ratio must be strictly between 0 and 1");
  std::set<std::string> distinct;
  for (const auto& e : m.entries) distinct.insert(e.project);
  if (distinct.size() < 2)
    throw DataError("split: need at least two projects, have " +
                    std::to_string(distinct.size()));
  std::vector<std::string> projects(distinct.begin(), distinct.end());
  util::Rng rng(util::derive_seed(seed, "project-split", 0));
  rng.shuffle(projects);
  size_t train_n = static_cast<size_t>(
      std::ceil(ratio * static_cast<double>(projects.size())));
  std::unordered_set<std::string> train(projects.begin(),
                                        projects.begin() + static_cast<long>(train_n));
  for (auto& e : m.entries)
    e.split = train.count(e.project) ? Split::Train : Split::Test;
  m.split_seed = seed;
  m.split_ratio = ratio;
  m.split_done = true;
}

std::string serialize(const Manifest& m) {
  std::ostringstream out;
  out << "#manifest\tv1\tsplit=" << (m.split_done ? 1 : 0) << "\tseed=" << m.split_seed
      << "\tratio=" << util::format_double(m.split_ratio) << "\n";
  for (const auto& e : m.entries) {
    out << util::tsv_escape(e.path) << '\t' << util::tsv_escape(e.project) << '\t'
        << util::tsv_escape(e.dedup_key) << '\t' << split_name(e.split) << '\n';
  }
  return out.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  auto lines = util::split_lines(text);
  if (lines.empty() || lines[0].rfind("#manifest\t", 0) != 0)
    throw DataError("manifest: missing header");
  auto head = util::split(lines[0], '\t');
  for (const auto& f : head) {
    if (f.rfind("split=", 0) == 0) m.split_done = f.substr(6) == "1";
    else if (f.rfind("seed=", 0) == 0) m.split_seed = std::stoull(f.substr(5));
    else if (f.rfind("ratio=", 0) == 0) m.split_ratio = std::stod(f.substr(6));
  }
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = util::split(lines[i], '\t');
    if (fields.size() != 4)
      throw DataError("manifest: bad record on line " + std::to_string(i + 1));
    FileEntry e;
    e.path = util::tsv_unescape(fields[0]);
    e.project = util::tsv_unescape(fields[1]);
    e.dedup_key = util::tsv_unescape(fields[2]);
    if (fields[3] == "train") e.split = Split::Train;
    else if (fields[3] == "test") e.split = Split::Test;
    else if (fields[3] == "-") e.split = Split::Unassigned;
    else throw DataError("manifest: bad split label on line " + std::to_string(i + 1));
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  util::write_file(path, serialize(m));
}

Manifest load_manifest(const std::string& path) {
  return parse_manifest(util::read_file(path));
}

std::string LineFilter::normalize_line(const std::string& line) {
  return util::collapse_ws(line);
}

void LineFilter::count_file(const std::string& content) {
  for (const auto& line : util::split_lines(content)) {
    std::string norm = normalize_line(line);
    if (norm.empty()) continue;
    ++counts_[norm];
  }
}

std::vector<bool> LineFilter::excluded_lines(const std::string& content) const {
  auto lines = util::split_lines(content);
  std::vector<bool> excluded(lines.size() + 1, false);  // 1-based
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& raw = lines[i];
    bool out = util::contains(raw, "hashCode") || util::contains(raw, "other");
    if (!out) {
      std::string norm = normalize_line(raw);
      if (!norm.empty()) {
        auto it = counts_.find(norm);
        if (it != counts_.end() && it->second > threshold_) out = true;
      }
    }
    excluded[i + 1] = out;
  }
  return excluded;
}

}  // namespace natex::corpus
