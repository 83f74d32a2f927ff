// Acceptance suite: one criterion per numbered section, each printing a
// single PASS/FAIL line with its wall time. Run with no arguments for the
// whole battery, or with a criterion number.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "align_oracle.hpp"
#include "json.hpp"
#include "meteor_cases.hpp"
#include "qe/corpus.hpp"
#include "qe/eval.hpp"
#include "qe/features.hpp"
#include "qe/meteor.hpp"
#include "qe/rng.hpp"
#include "qe/svr.hpp"
#include "qe/text.hpp"
#include "qp_oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = QE_CLI_PATH;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = kCli + " " + args + " >" + log + " 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "qe_acceptance";
  fs::create_directories(p);
  return p;
}

// ---- criterion 1: METEOR oracle suite -------------------------------------

Check criterion_meteor() {
  Check c;
  std::size_t hand = 0;
  for (const auto& tc : cases::meteor_hand_cases()) {
    qe::meteor::MeteorConfig cfg;
    cfg.alpha = tc.alpha;
    cfg.beta = tc.beta;
    cfg.gamma_pen = tc.gamma;
    cfg.lang = tc.lang;
    const auto s = qe::meteor::meteor_score(tc.hyp, tc.ref, cfg);
    c.expect(s.matches == tc.m && s.chunks == tc.ch,
             "alignment mismatch on case " + tc.name);
    c.expect(std::abs(s.score - tc.score) <= 1e-9,
             "score off on case " + tc.name);
    ++hand;
  }
  c.expect(hand >= 20, "fewer than 20 hand-computed cases");

  // Brute-force equivalence: all sequences up to length 6 over {a, b, c}.
  const std::vector<std::string> vocab = {"a", "b", "c"};
  std::vector<std::vector<std::string>> seqs = {{}};
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].size() == 6) continue;
    for (const auto& w : vocab) {
      auto t = seqs[i];
      t.push_back(w);
      seqs.push_back(std::move(t));
    }
  }
  long long checked = 0;
  oracle::ExactAligner ora;
  for (const auto& hyp : seqs) {
    for (const auto& ref : seqs) {
      if (ref.empty()) continue;
      const auto got = qe::meteor::align_tokens(hyp, ref, true, "en");
      const auto want = ora.run(hyp, ref);
      if (got.matches != want.matches || got.chunks != want.chunks) {
        std::ostringstream what;
        what << "oracle mismatch: hyp=[";
        for (const auto& w : hyp) what << w << ' ';
        what << "] ref=[";
        for (const auto& w : ref) what << w << ' ';
        what << "] got (" << got.matches << "," << got.chunks << ") want ("
             << want.matches << "," << want.chunks << ")";
        c.expect(false, what.str());
        return c;
      }
      ++checked;
    }
  }
  c.expect(checked == 1093LL * 1092LL, "sweep size unexpected");
  return c;
}

// ---- criterion 2: SVR oracle suite -----------------------------------------

Check criterion_svr() {
  Check c;
  qe::Rng rng(20250808);
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = 8 + rng.below(13);   // <= 20
    const std::size_t d = 1 + rng.below(5);    // <= 5
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < d; ++j) row.push_back(rng.unit() * 4.0 - 2.0);
      X.push_back(std::move(row));
      y.push_back(rng.unit());
    }
    qe::svr::SvrHyperparams hp;
    hp.C = (inst % 3 == 0) ? 1.0 : (inst % 3 == 1 ? 10.0 : 100.0);
    hp.epsilon = (inst % 2 == 0) ? 0.05 : 0.02;
    hp.kernel_gamma = 1.0 / static_cast<double>(d);
    // Oracle comparison with both solvers converged past the 1e-4 bar.
    const qe::svr::SmoOptions tight{1e-6, 2'000'000};
    const auto model = qe::svr::train_svr(X, y, hp, tight);
    const auto ref = oracle::solve_svr_qp(X, y, hp);
    for (const auto& x : X) {
      const double a = model.predict_standardized(x);
      const double b = ref.predict(X, x, hp.kernel_gamma);
      c.expect(std::abs(a - b) <= 1e-4,
               "instance " + std::to_string(inst) + ": prediction gap " +
                   std::to_string(std::abs(a - b)));
    }
    // The production stopping rule satisfies the 1e-3 KKT contract.
    const auto at_default = qe::svr::train_svr(X, y, hp);
    c.expect(at_default.kkt_residual <= 1e-3, "solver KKT residual above 1e-3");
    c.expect(qe::svr::kkt_residual_of(at_default, X, y) <= 1.1e-3,
             "recomputed KKT residual above tolerance");
  }

  // Constant labels give the constant predictor exactly.
  std::vector<std::vector<double>> X = {{0.0}, {0.5}, {1.0}, {1.5}};
  std::vector<double> y(4, 0.42);
  const auto flat = qe::svr::train_svr(X, y, {10.0, 0.05, 1.0});
  c.expect(flat.support.empty() && flat.bias == 0.42,
           "constant-label model is not the exact constant");
  for (const auto& x : X) {
    c.expect(flat.predict_standardized(x) == 0.42,
             "constant-label prediction drifts");
  }
  return c;
}

// ---- criterion 3: statistical primitives -----------------------------------

Check criterion_stats() {
  Check c;
  c.expect(std::abs(qe::eval::pearson({1, 2, 3, 4}, {1, 3, 2, 4}) - 0.8) <=
               1e-12,
           "pearson hand value off");
  c.expect(std::abs(qe::eval::pearson({1, 2, 3}, {1, 2, 3}) - 1.0) <= 1e-12,
           "pearson identity off");
  c.expect(std::abs(qe::eval::pearson({1, 2, 3}, {3, 2, 1}) + 1.0) <= 1e-12,
           "pearson reversal off");

  qe::Rng rng(99);
  std::vector<double> truth, anti;
  for (int i = 0; i < 200; ++i) {
    truth.push_back(rng.unit());
    anti.push_back(-truth.back() + 0.02 * rng.unit());
  }
  const auto dominant =
      qe::eval::paired_bootstrap(truth, truth, anti, 10000, 7, "A", "B");
  c.expect(dominant.p_value < 0.05, "dominant system p >= 0.05");
  const auto identical =
      qe::eval::paired_bootstrap(truth, truth, truth, 10000, 7, "A", "B");
  c.expect(identical.p_value == 1.0, "identical systems p != 1");
  const auto rerun =
      qe::eval::paired_bootstrap(truth, truth, anti, 10000, 7, "A", "B");
  c.expect(rerun.p_value == dominant.p_value, "bootstrap not deterministic");
  return c;
}

// ---- criterion 4: synthetic Table-1 analogue --------------------------------

Check criterion_table1() {
  Check c;
  const fs::path dir = work_dir() / "table1";
  fs::create_directories(dir);
  std::string corpora;
  for (const char* pair : {"en-ja", "en-fr", "en-it"}) {
    const std::string path = (dir / (std::string(pair) + ".jsonl")).string();
    const int rc = run_cli("synth --n 600 --lang-pair " + std::string(pair) +
                               " --profile mixed --seed 1729 --out " + path,
                           (dir / "synth.log").string());
    c.expect(rc == 0, "synth failed for " + std::string(pair));
    corpora += " --corpus " + path;
  }
  if (!c.ok) return c;

  const auto t0 = std::chrono::steady_clock::now();
  const int rc = run_cli("experiment" + corpora +
                             " --k 10 --jobs 2 --seed 1729 --out " +
                             (dir / "out").string(),
                         (dir / "experiment.log").string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  c.expect(rc == 0, "experiment command failed");
  c.expect(secs < 300.0,
           "experiment took " + std::to_string(secs) + "s (budget 300s)");
  if (!c.ok) return c;

  const auto report = json::parse(slurp((dir / "out" / "report.json").string()));
  for (const auto& r : report.at("reports")) {
    const std::string name = r.at("corpus").get<std::string>();
    const double baseline =
        r.at("manifests").at("baseline").at("mean_test_r").get<double>();
    const double trimmed =
        r.at("manifests").at("trimmed").at("mean_test_r").get<double>();
    const double proposed =
        r.at("manifests").at("proposed").at("mean_test_r").get<double>();
    c.expect(proposed >= 0.5, name + ": proposed r " +
                                  std::to_string(proposed) + " below 0.5");
    c.expect(proposed <= 0.691, name + ": proposed r " +
                                    std::to_string(proposed) +
                                    " above the observed range");
    c.expect(proposed > trimmed && proposed > baseline,
             name + ": proposed not strictly best (b=" +
                 std::to_string(baseline) + " t=" + std::to_string(trimmed) +
                 " p=" + std::to_string(proposed) + ")");
    bool found = false;
    for (const auto& s : r.at("significance")) {
      if (s.at("system_b") == "trimmed") {
        found = true;
        c.expect(s.at("p_value").get<double>() < 0.05,
                 name + ": proposed-vs-trimmed p >= 0.05");
      }
    }
    c.expect(found, name + ": missing proposed-vs-trimmed bootstrap");
  }
  return c;
}

// ---- criterion 5: ablation analogue -----------------------------------------

Check criterion_ablation() {
  Check c;
  const fs::path dir = work_dir() / "ablation";
  fs::create_directories(dir);

  auto run_profile = [&](const std::string& profile,
                         const std::string& expect_worst) {
    const std::string path = (dir / (profile + ".jsonl")).string();
    int rc = run_cli("synth --n 600 --lang-pair en-fr --profile " + profile +
                         " --seed 1729 --out " + path,
                     (dir / "synth.log").string());
    c.expect(rc == 0, "synth failed for profile " + profile);
    rc = run_cli("ablate --corpus " + path + " --k 10 --jobs 2 --seed 1729 " +
                     "--out " + (dir / profile).string(),
                 (dir / (profile + ".log")).string());
    c.expect(rc == 0, "ablate failed for profile " + profile);
    if (!c.ok) return;
    const auto out =
        json::parse(slurp((dir / profile / "ablation.json").string()));
    const auto& cols = out.at("ablation").at(0).at("columns");
    double worst = 1e9;
    std::string worst_label;
    std::ostringstream all;
    for (const auto& col : cols) {
      const double d = col.at("delta").get<double>();
      all << col.at("label").get<std::string>() << "=" << d << " ";
      if (d < worst) {
        worst = d;
        worst_label = col.at("label").get<std::string>();
      }
    }
    c.expect(worst_label == expect_worst,
             profile + ": most negative column is '" + worst_label +
                 "', expected '" + expect_worst + "' (" + all.str() + ")");
    c.expect(worst < 0.0, profile + ": no column is negative");
  };

  run_profile("fillers", "w/o fill");
  run_profile("length", "w/o len");
  return c;
}

// ---- criterion 6: determinism and no leakage --------------------------------

Check criterion_determinism() {
  Check c;
  const fs::path dir = work_dir() / "determinism";
  fs::create_directories(dir);
  const std::string path = (dir / "c.jsonl").string();
  int rc = run_cli(
      "synth --n 200 --lang-pair en-it --profile mixed --seed 11 --out " + path,
      (dir / "synth.log").string());
  c.expect(rc == 0, "synth failed");

  const std::string common = "experiment --corpus " + path +
                             " --k 5 --jobs 2 --seed 42 --resamples 2000 "
                             "--out ";
  rc = run_cli(common + (dir / "a").string(), (dir / "a.log").string());
  c.expect(rc == 0, "first experiment run failed");
  rc = run_cli(common + (dir / "b").string(), (dir / "b.log").string());
  c.expect(rc == 0, "second experiment run failed");
  if (!c.ok) return c;
  for (const char* f : {"report.json", "report.txt", "ablation.txt"}) {
    c.expect(slurp((dir / "a" / f).string()) == slurp((dir / "b" / f).string()),
             std::string(f) + " differs between identical runs");
  }

  // Trained resources are a function of the training fold only.
  const auto corpus = qe::corpus::load_corpus(path);
  const auto fillers = qe::corpus::default_filler_lexicon("it");
  const auto plan = qe::eval::make_folds(200, 5, qe::sub_seed(42, "folds"));
  const auto& fold = plan.folds[0];
  auto resource_bytes = [&](const qe::corpus::Corpus& cc) {
    std::vector<qe::features::TokenizedRecord> toks;
    for (const auto& r : cc.records) {
      toks.push_back(qe::features::tokenize_record(r, fillers));
    }
    return qe::features::resources_to_json(
               qe::features::build_resources(toks, fold.train, 5))
        .dump();
  };
  const std::string base = resource_bytes(corpus);
  auto permuted = corpus;
  for (std::size_t i = 0; i + 1 < fold.test.size(); i += 2) {
    std::swap(permuted.records[fold.test[i]],
              permuted.records[fold.test[i + 1]]);
  }
  c.expect(resource_bytes(permuted) == base,
           "permuting test records changed trained resources");
  auto scrambled = corpus;
  for (int i : fold.test) {
    scrambled.records[i].source = "noise noise noise";
    scrambled.records[i].interp = "";
    scrambled.records[i].reference = "altro rumore";
  }
  c.expect(resource_bytes(scrambled) == base,
           "test-record contents leaked into trained resources");
  return c;
}

// ---- criterion 7: degenerate-input fuzz --------------------------------------

Check criterion_fuzz() {
  Check c;
  qe::Rng rng(777);
  const std::vector<std::string> pairs = {"en-ja", "en-fr", "en-it"};

  struct PairCtx {
    qe::corpus::LangPair pair;
    qe::corpus::FillerLexicon fillers;
    qe::features::SeedList seed;
    qe::features::QeResources res;
  };
  std::vector<PairCtx> ctxs;
  for (const auto& p : pairs) {
    PairCtx ctx{qe::corpus::LangPair::parse(p),
                qe::corpus::default_filler_lexicon(p.substr(3)),
                qe::features::default_seed_list(p.substr(3)),
                {}};
    const auto small = qe::eval::generate_synthetic(
        120, ctx.pair, qe::eval::DegradationProfile::mixed(), 5);
    std::vector<qe::features::TokenizedRecord> toks;
    for (const auto& r : small.records) {
      toks.push_back(qe::features::tokenize_record(r, ctx.fillers));
    }
    std::vector<int> all(small.records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    ctx.res = qe::features::build_resources(toks, all, 3);
    ctxs.push_back(std::move(ctx));
  }

  const std::vector<std::string> scraps = {
      "parlamento", "budget", "...",  ",",      ".",    "ehm",   "euh",
      "darem-",     "l'eau",  "東京", "ミーティング", "思う", "très", "x",
      "!!",         "?",      "23",   "ヒント", "゠",   "escuela"};
  const qe::meteor::MeteorConfig mcfg;
  long long produced = 0;
  for (int it = 0; it < 10000; ++it) {
    const auto& ctx = ctxs[it % ctxs.size()];
    auto make_text = [&](std::size_t max_len, bool allow_empty) {
      std::string out;
      const std::size_t len =
          allow_empty ? rng.below(max_len + 1) : 1 + rng.below(max_len);
      for (std::size_t k = 0; k < len; ++k) {
        out += scraps[rng.below(scraps.size())];
        out += ' ';
      }
      return out;
    };
    qe::corpus::UtteranceRecord r;
    r.id = "fuzz-" + std::to_string(it);
    r.lang_pair = ctx.pair;
    switch (it % 5) {
      case 0: r.interp = ""; break;                       // silence
      case 1: r.interp = "... ... ..."; break;            // all punctuation
      case 2: r.interp = scraps[rng.below(scraps.size())]; break;  // one token
      default: r.interp = make_text(24, true);
    }
    r.source = make_text(20, false);
    r.reference = make_text(20, false);
    try {
      const auto toks = qe::features::tokenize_record(r, ctx.fillers);
      qe::features::Extractor ex(ctx.res, ctx.seed, ctx.pair);
      for (const auto& manifest : {qe::features::FeatureManifest::baseline(),
                                   qe::features::FeatureManifest::proposed()}) {
        const auto fv = ex.extract(r, toks, manifest);
        for (double v : fv.values) {
          if (!std::isfinite(v)) {
            c.expect(false, "non-finite feature at record " + r.id);
            return c;
          }
        }
      }
      auto hyp = qe::text::tokenize(r.interp, ctx.pair.tgt).tokens;
      auto ref = qe::text::tokenize(r.reference, ctx.pair.tgt).tokens;
      if (!ref.empty()) {
        qe::meteor::MeteorConfig cfg = mcfg;
        cfg.lang = ctx.pair.tgt;
        const auto s = qe::meteor::meteor_score(hyp, ref, cfg);
        if (!(s.score >= 0.0 && s.score <= 1.0)) {
          c.expect(false, "METEOR out of range at record " + r.id);
          return c;
        }
      }
      ++produced;
    } catch (const std::exception& ex) {
      c.expect(false, "exception at record " + r.id + ": " + ex.what());
      return c;
    }
  }
  c.expect(produced == 10000, "not all fuzz records were processed");
  return c;
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;
  std::function<Check()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "METEOR oracle suite", 30.0, criterion_meteor},
      {2, "SVR oracle suite", 60.0, criterion_svr},
      {3, "statistical primitives", 30.0, criterion_stats},
      {4, "synthetic Table-1 analogue", 300.0, criterion_table1},
      {5, "ablation analogue", 600.0, criterion_ablation},
      {6, "determinism and no leakage", 600.0, criterion_determinism},
      {7, "degenerate-input fuzz", 300.0, criterion_fuzz},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  bool all_ok = true;
  for (const auto& cr : criteria) {
    if (only != 0 && cr.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (secs > cr.budget_seconds) {
      c.ok = false;
      c.detail = "over time budget (" + std::to_string(secs) + "s > " +
                 std::to_string(cr.budget_seconds) + "s)";
    }
    std::printf("%s criterion %d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL",
                cr.id, cr.label, secs, c.ok ? "" : " -- ",
                c.ok ? "" : c.detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && c.ok;
  }
  return all_ok ? 0 : 1;
}
