#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = QE_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qe_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help is available for every subcommand") {
  for (const char* sub :
       {"ingest", "score", "extract", "train", "predict", "synth", "evaluate",
        "ablate", "experiment"}) {
    CHECK(run(std::string(sub) + " --help") == 0);
  }
  CHECK(run("--help") == 0);
}

TEST_CASE("unknown flags exit nonzero") {
  CHECK(run("score --no-such-flag") != 0);
  CHECK(run("bogus-subcommand") != 0);
}

TEST_CASE("synth, ingest, score pipeline") {
  TempDir tmp;
  const auto corpus = tmp / "c.jsonl";
  CHECK(run("synth --n 120 --lang-pair en-it --profile mixed --seed 5 --out " +
            corpus) == 0);
  CHECK(run("ingest --corpus " + corpus) == 0);
  const auto labels = tmp / "labels.tsv";
  CHECK(run("score --corpus " + corpus + " --out " + labels) == 0);
  std::ifstream in(labels);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "utterance_id\tmeteor\tmatches\tchunks");
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 120);
}

TEST_CASE("score means near one on an identical-pairs fixture") {
  TempDir tmp;
  const auto corpus = tmp / "ident.jsonl";
  {
    std::ofstream out(corpus);
    for (int i = 0; i < 10; ++i) {
      out << R"({"id":"u)" << i
          << R"(","lang_pair":"en-fr","source":"the parliament votes the budget now",)"
          << R"("interp":"le parlement vote le budget maintenant",)"
          << R"("reference":"le parlement vote le budget maintenant"})"
          << "\n";
    }
  }
  const auto labels = tmp / "labels.tsv";
  CHECK(run("score --corpus " + corpus + " --out " + labels) == 0);
  std::ifstream in(labels);
  std::string header, line;
  std::getline(in, header);
  double sum = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string id;
    double score;
    ss >> id >> score;
    sum += score;
    ++rows;
  }
  CHECK(rows == 10);
  CHECK(sum / rows > 0.99);
}

TEST_CASE("score exits nonzero when a record cannot be labeled") {
  TempDir tmp;
  const auto corpus = tmp / "bad.jsonl";
  {
    std::ofstream out(corpus);
    out << R"({"id":"u0","lang_pair":"en-fr","source":"a b","interp":"x","reference":"x y"})"
        << "\n";
    out << R"({"id":"u1","lang_pair":"en-fr","source":"a b","interp":"x","reference":" "})"
        << "\n";
  }
  CHECK(run("score --corpus " + corpus + " --out " + (tmp / "l.tsv")) != 0);
}

TEST_CASE("extract writes the feature matrix with labels") {
  TempDir tmp;
  const auto corpus = tmp / "c.jsonl";
  REQUIRE(run("synth --n 100 --lang-pair en-fr --seed 9 --out " + corpus) == 0);
  const auto feats = tmp / "f.tsv";
  CHECK(run("extract --corpus " + corpus + " --manifest trimmed --out " +
            feats) == 0);
  std::ifstream in(feats);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("utterance_id\t", 0) == 0);
  CHECK(header.find("meteor") != std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 100);
}

TEST_CASE("train then predict round-trips, manifest mismatch is fatal") {
  TempDir tmp;
  const auto corpus = tmp / "c.jsonl";
  REQUIRE(run("synth --n 150 --lang-pair en-fr --seed 31 --out " + corpus) == 0);
  const auto model = tmp / "model.json";
  const auto res = tmp / "res.json";
  CHECK(run("train --corpus " + corpus + " --manifest proposed --out " + model +
            " --resources-out " + res + " --no-grid --C 10 --epsilon 0.02") ==
        0);
  const auto pred = tmp / "pred.tsv";
  CHECK(run("predict --corpus " + corpus + " --model " + model +
            " --resources " + res + " --out " + pred) == 0);
  std::ifstream in(pred);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "utterance_id\tprediction");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string id;
    double value;
    ss >> id >> value;
    CHECK(std::isfinite(value));
    ++rows;
  }
  CHECK(rows == 150);

  CHECK(run("predict --corpus " + corpus + " --model " + model +
            " --resources " + res + " --manifest baseline --out " +
            (tmp / "p2.tsv")) != 0);
  CHECK(!fs::exists(tmp / "p2.tsv"));  // error before any output
}

TEST_CASE("experiment outputs are byte-identical across reruns") {
  TempDir tmp;
  const auto corpus = tmp / "c.jsonl";
  REQUIRE(run("synth --n 120 --lang-pair en-fr --seed 8 --out " + corpus) == 0);
  const std::string common = "evaluate --corpus " + corpus +
                             " --k 3 --no-grid --C 10 --epsilon 0.02 "
                             "--resamples 1000 --seed 77 --out ";
  CHECK(run(common + (tmp / "run1")) == 0);
  CHECK(run(common + (tmp / "run2")) == 0);
  const auto a = slurp(tmp / "run1/report.json");
  const auto b = slurp(tmp / "run2/report.json");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(slurp(tmp / "run1/report.txt") == slurp(tmp / "run2/report.txt"));

  // A different seed must change the report.
  CHECK(run("evaluate --corpus " + corpus +
            " --k 3 --no-grid --C 10 --epsilon 0.02 --resamples 1000 "
            "--seed 78 --out " +
            (tmp / "run3")) == 0);
  CHECK(slurp(tmp / "run3/report.json") != a);
}

TEST_CASE("config file supplies defaults and flags override") {
  TempDir tmp;
  const auto corpus = tmp / "c.jsonl";
  REQUIRE(run("synth --n 120 --lang-pair en-fr --seed 8 --out " + corpus) == 0);
  const auto config = tmp / "run.json";
  {
    std::ofstream out(config);
    out << R"({"corpus": ")" << corpus
        << R"(", "k": 3, "grid": false, "C": 10.0, "epsilon": 0.02,)"
        << R"( "resamples": 1000, "seed": 77, "out": ")" << (tmp / "cfgrun")
        << R"("})";
  }
  CHECK(run("evaluate --config " + config) == 0);
  const std::string common = "evaluate --corpus " + corpus +
                             " --k 3 --no-grid --C 10 --epsilon 0.02 "
                             "--resamples 1000 --seed 77 --out " +
                             (tmp / "flagrun");
  CHECK(run(common) == 0);
  CHECK(slurp(tmp / "cfgrun/report.json") == slurp(tmp / "flagrun/report.json"));

  // Flag overrides the config seed, so the bytes change.
  CHECK(run("evaluate --config " + config + " --seed 123 --out " +
            (tmp / "override")) == 0);
  CHECK(slurp(tmp / "override/report.json") !=
        slurp(tmp / "cfgrun/report.json"));
}
