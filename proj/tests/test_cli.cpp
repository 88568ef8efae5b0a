#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "natex/corpus.hpp"
#include "natex/experiment.hpp"
#include "natex/survey.hpp"
#include "natex/transforms.hpp"
#include "natex/util.hpp"

namespace fs = std::filesystem;
using namespace natex;

namespace {

const char* natex_bin() { return std::getenv("NATEX_BIN"); }

struct Cmd {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

Cmd run_natex(const fixtures::TempDir& tmp, const std::string& args) {
  static int counter = 0;
  std::string log = tmp.path() + "/cmd_" + std::to_string(counter++) + ".log";
  std::string cmd = std::string("'") + natex_bin() + "' " + args + " >'" + log + "' 2>&1";
  int st = std::system(cmd.c_str());
  Cmd c;
  if (WIFEXITED(st)) c.code = WEXITSTATUS(st);
  c.out = util::read_file(log);
  return c;
}

// demo corpus with four projects so a 0.7 split leaves one test project
std::vector<std::string> demo_roots(const std::string& dir) {
  return {dir + "/alpha", dir + "/beta", dir + "/gamma", dir + "/delta"};
}

}  // namespace

TEST_CASE("the command line drives the whole flow") {
  REQUIRE(natex_bin() != nullptr);
  fixtures::TempDir tmp;
  std::string corpus_dir = tmp.path() + "/corpus";

  Cmd demo = run_natex(tmp, "demo --dir '" + corpus_dir + "' --projects 4 --files 3"
                            " --methods 6 --seed 5");
  REQUIRE(demo.code == 0);
  CHECK(util::contains(demo.out, "wrote 12 files"));

  std::string roots;
  for (const auto& r : demo_roots(corpus_dir)) roots += " --root '" + r + "'";
  std::string m0 = tmp.path() + "/m0.tsv";
  std::string m1 = tmp.path() + "/m1.tsv";
  std::string manifest = tmp.path() + "/manifest.tsv";

  Cmd ingest = run_natex(tmp, "corpus ingest" + roots + " --out '" + m0 + "'");
  REQUIRE(ingest.code == 0);
  CHECK(util::contains(ingest.out, "ingested 12 files"));

  Cmd dedup = run_natex(tmp, "corpus dedup --manifest '" + m0 + "' --out '" + m1 + "'");
  REQUIRE(dedup.code == 0);

  Cmd split = run_natex(tmp, "corpus split --manifest '" + m1 + "' --ratio 0.7 --seed 3 --out '" +
                                 manifest + "'");
  REQUIRE(split.code == 0);
  CHECK(util::contains(split.out, "9 train, 3 test"));

  // a token/site dump of one generated file
  corpus::Manifest loaded = corpus::load_manifest(manifest);
  auto test_entries = loaded.files(corpus::Split::Test);
  REQUIRE(!test_entries.empty());
  std::string test_file = test_entries[0]->path;
  Cmd dump = run_natex(tmp, "frontend dump --file '" + test_file + "'");
  REQUIRE(dump.code == 0);
  CHECK(util::contains(dump.out, "infix"));

  std::string trans_path = tmp.path() + "/transforms.tsv";
  Cmd trans = run_natex(tmp, "transform run --manifest '" + manifest +
                                 "' --kind arith_swap --split test --seed 9 --out '" + trans_path +
                                 "'");
  REQUIRE(trans.code == 0);
  auto trecords = transforms::parse_records(util::read_file(trans_path));
  REQUIRE(!trecords.empty());
  for (const auto& r : trecords) CHECK(r.kind == transforms::Kind::ArithSwap);

  std::string raw_model = tmp.path() + "/raw.bin";
  std::string abs_model = tmp.path() + "/abs.bin";
  Cmd train = run_natex(tmp, "lm train --manifest '" + manifest +
                                 "' --split train --order 4 --out '" + raw_model + "'");
  REQUIRE(train.code == 0);
  CHECK(util::contains(train.out, "vocab"));
  Cmd train_abs = run_natex(tmp, "lm train --manifest '" + manifest +
                                     "' --split train --order 4 --abstracted --out '" + abs_model +
                                     "'");
  REQUIRE(train_abs.code == 0);

  Cmd score = run_natex(tmp, "lm score --model '" + raw_model + "' --file '" + test_file +
                                 "' --cache");
  REQUIRE(score.code == 0);
  CHECK(util::contains(score.out, "tokens\t"));
  CHECK(util::contains(score.out, "total_bits\t"));
  CHECK(util::contains(score.out, "mean_bits\t"));

  std::string deltas_path = tmp.path() + "/deltas.tsv";
  Cmd exp = run_natex(tmp, "experiment run --test-manifest '" + manifest + "' --global-model '" +
                               raw_model + "' --abs-model '" + abs_model +
                               "' --kinds all --seed 9 --threads 2 --out '" + deltas_path + "'");
  REQUIRE(exp.code == 0);
  auto deltas = experiment::parse_deltas(util::read_file(deltas_path));
  REQUIRE(!deltas.empty());
  bool saw_abs = false;
  for (const auto& d : deltas)
    if (d.model == experiment::ModelId::CacheAbs) saw_abs = true;
  CHECK(saw_abs);

  std::string table_path = tmp.path() + "/table.tsv";
  Cmd agg = run_natex(tmp, "experiment aggregate --in '" + deltas_path + "' --out '" + table_path +
                               "'");
  REQUIRE(agg.code == 0);
  auto table_lines = util::split_lines(util::read_file(table_path));
  REQUIRE(!table_lines.empty());
  CHECK(table_lines[0] == "kind\tmodel\tn\tmedian_delta\tpseudomedian\tp_value\tci_low\tci_high");

  std::string wilcox_path = tmp.path() + "/wilcoxon.tsv";
  Cmd wil = run_natex(tmp, "stats wilcoxon --in '" + deltas_path +
                               "' --group kind,model --out '" + wilcox_path + "'");
  REQUIRE(wil.code == 0);
  auto wil_lines = util::split_lines(util::read_file(wilcox_path));
  REQUIRE(!wil_lines.empty());
  CHECK(wil_lines[0] == "kind\tmodel\tn\tmedian\tpseudomedian\tp_value\tci_low\tci_high\texact");

  std::string ols_path = tmp.path() + "/ols.txt";
  Cmd ols = run_natex(tmp, "stats ols --in '" + deltas_path + "' --min-level-count 2 --out '" +
                               ols_path + "'");
  REQUIRE(ols.code == 0);
  std::string ols_text = util::read_file(ols_path);
  CHECK(util::contains(ols_text, "term\tcoef\tse"));
  CHECK(util::contains(ols_text, "r_squared\t"));
  CHECK(util::contains(ols_text, "vif_warning\t"));

  std::string pairs_path = tmp.path() + "/pairs.tsv";
  Cmd sel = run_natex(tmp, "survey select --in '" + deltas_path + "' --per-cell 5 --out '" +
                               pairs_path + "'");
  REQUIRE(sel.code == 0);
  auto pairs = survey::parse_pairs(util::read_file(pairs_path));
  REQUIRE(!pairs.empty());

  int per_r = static_cast<int>(std::min<size_t>(6, pairs.size()));
  std::string forms_dir = tmp.path() + "/forms";
  Cmd emit = run_natex(tmp, "survey emit --pairs '" + pairs_path + "' --n-forms 2" +
                               " --per-respondent " + std::to_string(per_r) + " --seed 3" +
                               " --out-dir '" + forms_dir + "'");
  REQUIRE(emit.code == 0);
  CHECK(fs::exists(forms_dir + "/form_001.txt"));
  CHECK(fs::exists(forms_dir + "/form_002.txt"));
  CHECK(fs::exists(forms_dir + "/answer_key.tsv"));

  // a filled-in response sheet: everyone votes for side a
  std::vector<survey::ResponseRecord> responses;
  for (size_t i = 0; i < std::min<size_t>(3, pairs.size()); ++i)
    responses.push_back({"r1", pairs[i].id, 'a'});
  responses.push_back({"r1", survey::attention_id(pairs.size()), 'a'});
  std::string resp_path = tmp.path() + "/responses.tsv";
  util::write_file(resp_path, survey::serialize_responses(responses));

  std::string report_path = tmp.path() + "/report.txt";
  Cmd ana = run_natex(tmp, "survey analyze --pairs '" + pairs_path + "' --responses '" +
                               resp_path + "' --out '" + report_path + "'");
  REQUIRE(ana.code == 0);
  CHECK(util::contains(util::read_file(report_path), "overall_agreement"));
  auto long_lines = util::split_lines(util::read_file(report_path + ".long.tsv"));
  REQUIRE(!long_lines.empty());
  CHECK(long_lines[0] == "outcome\tlm_out\tkind\trespondent\tquestion");
}

TEST_CASE("the pipeline obeys its config file and reruns byte for byte") {
  REQUIRE(natex_bin() != nullptr);
  fixtures::TempDir tmp;
  std::string corpus_dir = tmp.path() + "/corpus";
  Cmd demo = run_natex(tmp, "demo --dir '" + corpus_dir + "' --projects 4 --files 3"
                            " --methods 6 --seed 5");
  REQUIRE(demo.code == 0);

  std::string roots_csv;
  for (const auto& r : demo_roots(corpus_dir)) {
    if (!roots_csv.empty()) roots_csv += ',';
    roots_csv += r;
  }
  auto config_for = [&](const std::string& out_dir) {
    return "# demo pipeline\n"
           "roots=" + roots_csv + "\n"
           "out_dir=" + out_dir + "\n"
           "seed=5\n"
           "order=4\n"
           "ratio=0.7\n"
           "kinds=all\n"
           "models=all\n"
           "survey_model=global\n"
           "per_cell=4\n"
           "n_forms=2\n"
           "per_respondent=6\n"
           "threads=2\n";
  };
  std::string out1 = tmp.path() + "/out1";
  std::string out2 = tmp.path() + "/out2";
  std::string cfg1 = tmp.write("cfg1.txt", config_for(out1));
  std::string cfg2 = tmp.write("cfg2.txt", config_for(out2));

  // the config seed must beat the flag seed
  Cmd p1 = run_natex(tmp, "pipeline --config '" + cfg1 + "' --seed 99");
  REQUIRE(p1.code == 0);
  CHECK(util::contains(p1.out, "pipeline complete"));
  CHECK(util::contains(util::read_file(out1 + "/resolved_config.txt"), "seed=5"));

  for (const char* name : {"manifest.tsv", "model_raw.bin", "model_abs.bin", "transforms.tsv",
                           "deltas.tsv", "table.tsv", "survey_pairs.tsv"})
    CHECK(fs::exists(out1 + "/" + name));
  CHECK(fs::exists(out1 + "/forms/form_001.txt"));
  CHECK(fs::exists(out1 + "/forms/form_002.txt"));
  CHECK(fs::exists(out1 + "/forms/answer_key.tsv"));

  Cmd p2 = run_natex(tmp, "pipeline --config '" + cfg2 + "'");
  REQUIRE(p2.code == 0);
  for (const char* name : {"manifest.tsv", "model_raw.bin", "model_abs.bin", "transforms.tsv",
                           "deltas.tsv", "table.tsv", "survey_pairs.tsv", "forms/form_001.txt",
                           "forms/answer_key.tsv"}) {
    CAPTURE(name);
    CHECK(util::read_file(out1 + "/" + name) == util::read_file(out2 + "/" + name));
  }
}

TEST_CASE("exit codes separate usage, config and data failures") {
  REQUIRE(natex_bin() != nullptr);
  fixtures::TempDir tmp;

  CHECK(run_natex(tmp, "--help").code == 0);
  CHECK(run_natex(tmp, "").code == 2);               // a subcommand is required
  CHECK(run_natex(tmp, "bogus-subcommand").code == 2);
  CHECK(run_natex(tmp, "lm train --no-such-flag").code == 2);

  // config errors are checked before any file is touched
  Cmd sel = run_natex(tmp, "survey select --in nowhere.tsv --model bogus --out x.tsv");
  CHECK(sel.code == 2);
  CHECK(util::contains(sel.out, "unknown model"));

  // missing inputs are data errors
  std::string missing = tmp.path() + "/missing.tsv";
  CHECK(run_natex(tmp, "lm train --manifest '" + missing + "' --out '" + tmp.path() +
                           "/m.bin'").code == 3);
  CHECK(run_natex(tmp, "experiment aggregate --in '" + missing + "'").code == 3);
  CHECK(run_natex(tmp, "corpus ingest --root '" + tmp.path() + "/no_such_dir' --out '" +
                           tmp.path() + "/m.tsv'").code == 3);

  // a malformed pipeline config is a config error
  std::string bad_cfg = tmp.write("bad.cfg", "no_such_key=1\n");
  Cmd pipe = run_natex(tmp, "pipeline --config '" + bad_cfg + "'");
  CHECK(pipe.code == 2);
  CHECK(util::contains(pipe.out, "unknown key"));

  // a pipeline without roots cannot start
  std::string empty_cfg = tmp.write("empty.cfg", "seed=1\n");
  CHECK(run_natex(tmp, "pipeline --config '" + empty_cfg + "'").code == 2);
}
