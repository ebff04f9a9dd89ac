// End-to-end tests of the gctm binary: exit-code contract, stage caching,
// artifact idempotence. The binary path comes from the build system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path log = workdir / "cmd_output.txt";
  std::ostringstream cmd;
  cmd << "cd " << workdir << " && " << GCTM_CLI_PATH << " " << args << " > " << log
      << " 2>&1";
  const int status = std::system(cmd.str().c_str());
  CmdResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

fs::path make_workspace(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gctm_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_fixture_corpus(const fs::path& path, int n_docs = 90) {
  gctm::test::PlantedCorpusConfig cfg;
  cfg.n_docs = n_docs;
  cfg.n_topics = 3;
  cfg.words_per_topic = 10;
  cfg.doc_len = 25;
  cfg.noise = 0.03;
  std::ofstream out(path);
  for (const auto& doc : gctm::test::make_planted_corpus(cfg)) {
    out << R"({"id": ")" << doc.id << R"(", "text": ")" << doc.text << R"(", "label": ")"
        << *doc.label << R"("})" << "\n";
  }
}

void write_config(const fs::path& path, const std::string& extra = "") {
  std::ofstream out(path);
  out << "corpus.path = corpus.jsonl\n"
      << "corpus.vocab_size = 30\n"
      << "corpus.window_length = 10\n"
      << "split.train = 0.6\n"
      << "split.val = 0.2\n"
      << "split.test = 0.2\n"
      << "graphs.mu_pos = 0.2\n"
      << "graphs.mu_neg = 0.2\n"
      << "model.k = 3\n"
      << "model.hidden = 12\n"
      << "augment.hidden_dim = 6\n"
      << "train.epochs = 2\n"
      << "train.batch_size = 16\n"
      << "train.eval_every = 1\n"
      << "train.seeds = 1\n"
      << "eval.rf_trees = 30\n"
      << extra;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("preprocess: success, artifacts, cache hit, idempotent bytes") {
  const fs::path dir = make_workspace("preprocess");
  write_fixture_corpus(dir / "corpus.jsonl");
  write_config(dir / "gctm.conf");

  CmdResult first = run_cli("--config gctm.conf --out cache preprocess", dir);
  CHECK(first.exit_code == 0);
  CHECK(fs::exists(dir / "cache/preprocess/vocab.txt"));
  CHECK(fs::exists(dir / "cache/preprocess/tfidf.tsv"));
  CHECK(fs::exists(dir / "cache/manifest.json"));

  const std::string tfidf_before = slurp(dir / "cache/preprocess/tfidf.tsv");
  CmdResult second = run_cli("--config gctm.conf --out cache preprocess", dir);
  CHECK(second.exit_code == 0);
  CHECK(second.output.find("[cache]") != std::string::npos);
  CHECK(slurp(dir / "cache/preprocess/tfidf.tsv") == tfidf_before);

  // Changing a preprocessing key invalidates the cache.
  CmdResult changed = run_cli(
      "--config gctm.conf --out cache --override corpus.window_length=5 preprocess", dir);
  CHECK(changed.exit_code == 0);
  CHECK(changed.output.find("[done]") != std::string::npos);
}

TEST_CASE("missing corpus file exits 2") {
  const fs::path dir = make_workspace("missing_input");
  write_config(dir / "gctm.conf");  // no corpus.jsonl written
  CmdResult result = run_cli("--config gctm.conf --out cache preprocess", dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("missing config file exits 2") {
  const fs::path dir = make_workspace("missing_config");
  CmdResult result = run_cli("--config nope.conf --out cache preprocess", dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("stage order is enforced with exit 3") {
  const fs::path dir = make_workspace("stage_order");
  write_fixture_corpus(dir / "corpus.jsonl");
  write_config(dir / "gctm.conf");

  SUBCASE("eval before anything") {
    CmdResult result = run_cli("--config gctm.conf --out cache eval", dir);
    CHECK(result.exit_code == 3);
  }
  SUBCASE("build-graphs before preprocess") {
    CmdResult result = run_cli("--config gctm.conf --out cache build-graphs", dir);
    CHECK(result.exit_code == 3);
  }
  SUBCASE("train against a stale graphs stage") {
    CHECK(run_cli("--config gctm.conf --out cache preprocess", dir).exit_code == 0);
    CHECK(run_cli("--config gctm.conf --out cache build-graphs", dir).exit_code == 0);
    // A graphs-config change makes the stored graphs stage stale for train.
    CmdResult result = run_cli(
        "--config gctm.conf --out cache --override graphs.mu_pos=0.3 train", dir);
    CHECK(result.exit_code == 3);
  }
}

TEST_CASE("full pipeline smoke run: preprocess .. report") {
  const fs::path dir = make_workspace("full_pipeline");
  write_fixture_corpus(dir / "corpus.jsonl");
  write_config(dir / "gctm.conf");

  for (const char* stage : {"preprocess", "build-graphs", "train", "eval", "report"}) {
    CmdResult result = run_cli(std::string("--config gctm.conf --out cache ") + stage, dir);
    INFO(stage, " output: ", result.output);
    REQUIRE(result.exit_code == 0);
  }
  CHECK(fs::exists(dir / "cache/train/run_full_seed1.json"));
  CHECK(fs::exists(dir / "cache/eval/report.json"));
  CHECK(fs::exists(dir / "cache/eval/topics.txt"));
  CHECK(fs::exists(dir / "cache/eval/theta_test.tsv"));
  CHECK(fs::exists(dir / "cache/report/table.txt"));
  const std::string report = slurp(dir / "cache/report/table.txt");
  CHECK(report.find("GCTM") != std::string::npos);

  // Rerunning train is a cache hit.
  CmdResult rerun = run_cli("--config gctm.conf --out cache train", dir);
  CHECK(rerun.exit_code == 0);
  CHECK(rerun.output.find("[cache]") != std::string::npos);
}

TEST_CASE("ablate emits exactly four result rows") {
  const fs::path dir = make_workspace("ablate");
  write_fixture_corpus(dir / "corpus.jsonl", 60);
  write_config(dir / "gctm.conf", "train.epochs = 1\n");

  CHECK(run_cli("--config gctm.conf --out cache preprocess", dir).exit_code == 0);
  CHECK(run_cli("--config gctm.conf --out cache build-graphs", dir).exit_code == 0);
  CmdResult result = run_cli("--config gctm.conf --out cache ablate", dir);
  REQUIRE(result.exit_code == 0);
  int rows = 0;
  for (const char* mode : {"full npmi", "no_cl npmi", "no_neg npmi", "no_pos npmi"}) {
    if (result.output.find(mode) != std::string::npos) ++rows;
  }
  CHECK(rows == 4);
  for (const char* mode : {"full", "no_cl", "no_neg", "no_pos"}) {
    CHECK(fs::exists(dir / ("cache/ablate/run_" + std::string(mode) + "_seed1.json")));
  }
}

TEST_CASE("numeric fault during training exits 4") {
  const fs::path dir = make_workspace("numeric_fault");
  write_fixture_corpus(dir / "corpus.jsonl", 60);
  write_config(dir / "gctm.conf", "train.epochs = 1\n");
  CHECK(run_cli("--config gctm.conf --out cache preprocess", dir).exit_code == 0);
  CHECK(run_cli("--config gctm.conf --out cache build-graphs", dir).exit_code == 0);
  // A single seed that overflows means every seed failed -> numeric fault.
  CmdResult result = run_cli(
      "--config gctm.conf --out cache --override train.lr=1e155 "
      "--override train.clip_norm=0 train",
      dir);
  CHECK(result.exit_code == 4);
}

TEST_CASE("--seed narrows training to a single seed") {
  const fs::path dir = make_workspace("seed_flag");
  write_fixture_corpus(dir / "corpus.jsonl", 60);
  write_config(dir / "gctm.conf", "train.seeds = 1,2\ntrain.epochs = 1\n");
  CHECK(run_cli("--config gctm.conf --out cache preprocess", dir).exit_code == 0);
  CHECK(run_cli("--config gctm.conf --out cache build-graphs", dir).exit_code == 0);
  CmdResult result = run_cli("--config gctm.conf --out cache --seed 7 train", dir);
  REQUIRE(result.exit_code == 0);
  CHECK(fs::exists(dir / "cache/train/run_full_seed7.json"));
  CHECK_FALSE(fs::exists(dir / "cache/train/run_full_seed1.json"));
}

TEST_CASE("contextual embeddings flow through the whole pipeline") {
  const fs::path dir = make_workspace("contextual");
  write_fixture_corpus(dir / "corpus.jsonl", 60);
  // Embedding rows for every document, dim 8.
  {
    std::ofstream out(dir / "emb.tsv");
    out << "dim=8\n";
    gctm::Rng rng(4);
    for (int d = 0; d < 60; ++d) {
      out << "doc" << d;
      for (int i = 0; i < 8; ++i) out << '\t' << rng.normal();
      out << '\n';
    }
  }
  write_config(dir / "gctm.conf", "corpus.embeddings = emb.tsv\ntrain.epochs = 1\n");
  for (const char* stage : {"preprocess", "build-graphs", "train", "eval"}) {
    CmdResult result = run_cli(std::string("--config gctm.conf --out cache ") + stage, dir);
    INFO(stage, " output: ", result.output);
    REQUIRE(result.exit_code == 0);
  }
  CHECK(fs::exists(dir / "cache/eval/report.json"));
}

TEST_CASE("embeddings missing a document exit 2 at preprocess") {
  const fs::path dir = make_workspace("contextual_missing");
  write_fixture_corpus(dir / "corpus.jsonl", 60);
  {
    std::ofstream out(dir / "emb.tsv");
    out << "dim=4\n";
    out << "doc0\t1\t2\t3\t4\n";  // 59 documents uncovered
  }
  write_config(dir / "gctm.conf", "corpus.embeddings = emb.tsv\n");
  CmdResult result = run_cli("--config gctm.conf --out cache preprocess", dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("GCTM_CACHE_DIR provides the artifact root") {
  const fs::path dir = make_workspace("env_cache");
  write_fixture_corpus(dir / "corpus.jsonl");
  write_config(dir / "gctm.conf");
  const fs::path log = dir / "cmd_output.txt";
  std::ostringstream cmd;
  cmd << "cd " << dir << " && GCTM_CACHE_DIR=env_cache_dir " << GCTM_CLI_PATH
      << " --config gctm.conf preprocess > " << log << " 2>&1";
  const int status = std::system(cmd.str().c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(dir / "env_cache_dir/preprocess/vocab.txt"));
}
