#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "natex/corpus.hpp"
#include "natex/util.hpp"

using namespace natex;
using namespace natex::corpus;

TEST_CASE("ingest walks roots recursively and keeps only java files") {
  fixtures::TempDir td;
  td.write("projA/src/Main.java", "class Main {}");
  td.write("projA/src/deep/Util.java", "class Util {}");
  td.write("projA/notes.txt", "skip me");
  td.write("projB/Thing.java", "class Thing {}");

  IngestStats st;
  Manifest m = ingest({td.path() + "/projA", td.path() + "/projB"}, &st);
  REQUIRE(m.entries.size() == 3);
  CHECK(st.files == 3);
  CHECK(m.entries[0].project == "projA");
  CHECK(m.entries[2].project == "projB");
  // sorted by path within the ingest
  CHECK(m.entries[0].path < m.entries[1].path);
  CHECK(util::ends_with(m.entries[2].path, "Thing.java"));
  CHECK(m.entries[0].dedup_key == "src/Main.java");
  CHECK_THROWS_AS(ingest({td.path() + "/missing_root"}), DataError);
}

TEST_CASE("dedup keeps the first path per parentDir/fileName key") {
  fixtures::TempDir td;
  td.write("p1/src/Main.java", "class A {}");
  td.write("p2/vendor/src/Main.java", "class B {}");  // same key: src/Main.java
  td.write("p2/other/Main.java", "class C {}");       // different parent dir

  Manifest m = ingest({td.path() + "/p1", td.path() + "/p2"});
  REQUIRE(m.entries.size() == 3);
  size_t removed = dedup(m);
  CHECK(removed == 1);
  REQUIRE(m.entries.size() == 2);
  // lexicographically first path wins
  CHECK(util::contains(m.entries[0].path, "p1"));
  CHECK(dedup(m) == 0);  // idempotent
}

TEST_CASE("split assigns whole projects") {
  fixtures::TempDir td;
  for (int p = 0; p < 5; ++p)
    for (int f = 0; f < 3; ++f)
      td.write("proj" + std::to_string(p) + "/F" + std::to_string(f) + ".java", "class F {}");
  std::vector<std::string> roots;
  for (int p = 0; p < 5; ++p) roots.push_back(td.path() + "/proj" + std::to_string(p));

  Manifest m = ingest(roots);
  split_by_project(m, 0.6, 7);
  CHECK(m.split_done);
  CHECK(m.split_ratio == 0.6);
  CHECK(m.split_seed == 7);

  std::map<std::string, Split> by_project;
  for (const auto& e : m.entries) {
    CHECK(e.split != Split::Unassigned);
    auto it = by_project.find(e.project);
    if (it == by_project.end())
      by_project[e.project] = e.split;
    else
      CHECK(it->second == e.split);  // no project straddles the boundary
  }
  int train = 0;
  for (const auto& [p, s] : by_project)
    if (s == Split::Train) ++train;
  CHECK(train == 3);  // ceil(0.6 * 5)

  // same seed, same assignment
  Manifest m2 = ingest(roots);
  split_by_project(m2, 0.6, 7);
  for (size_t i = 0; i < m.entries.size(); ++i) CHECK(m.entries[i].split == m2.entries[i].split);
}

TEST_CASE("split input validation") {
  fixtures::TempDir td;
  td.write("only/F.java", "class F {}");
  Manifest one = ingest({td.path() + "/only"});
  CHECK_THROWS_AS(split_by_project(one, 0.5, 1), DataError);

  td.write("second/G.java", "class G {}");
  Manifest two = ingest({td.path() + "/only", td.path() + "/second"});
  CHECK_THROWS_AS(split_by_project(two, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_by_project(two, 1.0, 1), ConfigError);
}

TEST_CASE("manifest serialization round-trips") {
  fixtures::TempDir td;
  td.write("pa/A.java", "class A {}");
  td.write("pb/B.java", "class B {}");
  Manifest m = ingest({td.path() + "/pa", td.path() + "/pb"});
  split_by_project(m, 0.5, 99);

  std::string path = td.path() + "/manifest.tsv";
  save_manifest(m, path);
  Manifest r = load_manifest(path);
  CHECK(r.split_done);
  CHECK(r.split_seed == 99);
  CHECK(r.split_ratio == 0.5);
  REQUIRE(r.entries.size() == m.entries.size());
  for (size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(r.entries[i].path == m.entries[i].path);
    CHECK(r.entries[i].project == m.entries[i].project);
    CHECK(r.entries[i].dedup_key == m.entries[i].dedup_key);
    CHECK(r.entries[i].split == m.entries[i].split);
  }
  CHECK_THROWS_AS(parse_manifest("not a manifest"), DataError);
}

TEST_CASE("files selector filters by split") {
  fixtures::TempDir td;
  td.write("pa/A.java", "class A {}");
  td.write("pb/B.java", "class B {}");
  Manifest m = ingest({td.path() + "/pa", td.path() + "/pb"});
  split_by_project(m, 0.5, 1);
  CHECK(m.files(Split::Train).size() + m.files(Split::Test).size() == 2);
  CHECK(m.files(Split::Unassigned).empty());
}

TEST_CASE("line filter flags frequent and hash-adjacent lines") {
  LineFilter filter(2);
  std::string repeated = "    int x = compute();\n";
  std::string file1 = repeated + repeated + "int y = 1;\n";
  std::string file2 = "int  x =  compute();\n";  // same after ws collapse
  filter.count_file(file1);
  filter.count_file(file2);

  std::string probe =
      "int x = compute();\n"
      "int y = 1;\n"
      "int h = obj.hashCode();\n"
      "int o = other.val;\n";
  auto excluded = filter.excluded_lines(probe);
  REQUIRE(excluded.size() >= 5);
  CHECK(excluded[1]);   // counted 3 times > threshold 2
  CHECK(!excluded[2]);  // counted once
  CHECK(excluded[3]);   // hashCode
  CHECK(excluded[4]);   // other
}

TEST_CASE("line normalization collapses whitespace") {
  CHECK(LineFilter::normalize_line("  a  +\tb ") == "a + b");
  CHECK(LineFilter::normalize_line("") == "");
}
