// Command-line front end: ingest -> score -> extract -> train -> evaluate,
// plus the synthetic-corpus generator and the full experiment pipeline.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qe/corpus.hpp"
#include "qe/eval.hpp"
#include "qe/features.hpp"
#include "qe/meteor.hpp"
#include "qe/rng.hpp"
#include "qe/svr.hpp"
#include "qe/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::vector<std::string> corpus_paths;
  std::string manifests = "baseline,trimmed,proposed";
  std::string out;
  std::uint64_t seed = qe::eval::kDefaultSeed;
  int jobs = 1;
  int k = 10;
  double meteor_alpha = 0.9;
  double meteor_beta = 3.0;
  double meteor_gamma_pen = 0.5;
  bool grid = true;
  double C = 10.0;
  double epsilon = 0.05;
  double kernel_gamma = 0.0;  // 0 = 1/d
  int resamples = 10000;
  int model1_iterations = 5;
  std::string lexicon_path;
  std::string seedlist_path;
};

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

qe::features::FeatureManifest manifest_by_name(const std::string& name) {
  using qe::features::FeatureManifest;
  if (name == "baseline") return FeatureManifest::baseline();
  if (name == "trimmed") return FeatureManifest::trimmed();
  if (name == "proposed") return FeatureManifest::proposed();
  for (const auto& m : qe::eval::ablation_manifests()) {
    if (m.name == name) return m;
  }
  throw std::invalid_argument("unknown manifest '" + name + "'");
}

qe::meteor::MeteorConfig meteor_config(const CommonOpts& o) {
  qe::meteor::MeteorConfig cfg;
  cfg.alpha = o.meteor_alpha;
  cfg.beta = o.meteor_beta;
  cfg.gamma_pen = o.meteor_gamma_pen;
  return cfg;
}

qe::eval::ExperimentConfig experiment_config(const CommonOpts& o,
                                             const qe::corpus::LangPair& pair) {
  qe::eval::ExperimentConfig cfg;
  for (const auto& name : split_csv(o.manifests)) {
    cfg.manifests.push_back(manifest_by_name(name));
  }
  cfg.meteor = meteor_config(o);
  cfg.k = o.k;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.bootstrap_resamples = o.resamples;
  cfg.model1_iterations = o.model1_iterations;
  if (!o.grid) {
    qe::svr::SvrHyperparams hp{o.C, o.epsilon, o.kernel_gamma};
    cfg.fixed_hp = hp;
  }
  if (!o.lexicon_path.empty()) {
    cfg.fillers = qe::corpus::load_filler_lexicon(o.lexicon_path);
  }
  if (!o.seedlist_path.empty()) {
    cfg.seed_list =
        qe::features::load_seed_list(o.seedlist_path, pair.tgt);
  }
  return cfg;
}

// Fixed hyperparameters need a concrete gamma; 0 means 1/d once d is known.
qe::svr::SvrHyperparams fixed_hp(const CommonOpts& o, std::size_t d) {
  qe::svr::SvrHyperparams hp;
  hp.C = o.C;
  hp.epsilon = o.epsilon;
  hp.kernel_gamma = o.kernel_gamma > 0.0
                        ? o.kernel_gamma
                        : 1.0 / static_cast<double>(std::max<std::size_t>(1, d));
  return hp;
}

void ensure_parent_dir(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

// Applies --config JSON values as defaults; explicit flags override them.
void apply_config_file(const std::string& path, CommonOpts& o) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  if (j.contains("corpus")) {
    o.corpus_paths.clear();
    if (j["corpus"].is_string()) {
      o.corpus_paths.push_back(j["corpus"].get<std::string>());
    } else {
      j["corpus"].get_to(o.corpus_paths);
    }
  }
  auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) j[key].get_to(field);
  };
  set("manifests", o.manifests);
  set("out", o.out);
  set("seed", o.seed);
  set("jobs", o.jobs);
  set("k", o.k);
  set("meteor_alpha", o.meteor_alpha);
  set("meteor_beta", o.meteor_beta);
  set("meteor_gamma_pen", o.meteor_gamma_pen);
  set("grid", o.grid);
  set("C", o.C);
  set("epsilon", o.epsilon);
  set("kernel_gamma", o.kernel_gamma);
  set("resamples", o.resamples);
  set("model1_iterations", o.model1_iterations);
  set("lexicon", o.lexicon_path);
  set("seedlist", o.seedlist_path);
}

struct LabeledFeatures {
  qe::features::FeatureManifest manifest;
  std::vector<qe::features::FeatureVector> rows;
  std::vector<std::vector<double>> values;
  std::vector<double> labels;  // empty unless requested
  qe::features::QeResources resources;
};

// Extracts features (and optionally METEOR labels) for a whole corpus with
// resources fit on that same corpus; the standalone path behind
// extract/train.
LabeledFeatures extract_corpus(const qe::corpus::Corpus& c,
                               const qe::features::FeatureManifest& manifest,
                               const CommonOpts& o,
                               const qe::features::QeResources* preloaded,
                               bool with_labels) {
  LabeledFeatures out;
  out.manifest = manifest;
  const auto fillers = o.lexicon_path.empty()
                           ? qe::corpus::default_filler_lexicon(c.lang_pair.tgt)
                           : qe::corpus::load_filler_lexicon(o.lexicon_path);
  const auto seed_list =
      o.seedlist_path.empty()
          ? qe::features::default_seed_list(c.lang_pair.tgt)
          : qe::features::load_seed_list(o.seedlist_path, c.lang_pair.tgt);

  std::vector<qe::features::TokenizedRecord> toks;
  toks.reserve(c.records.size());
  for (const auto& r : c.records) {
    toks.push_back(qe::features::tokenize_record(r, fillers));
  }
  if (preloaded) {
    out.resources = *preloaded;
  } else {
    std::vector<int> all(c.records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    out.resources =
        qe::features::build_resources(toks, all, o.model1_iterations);
  }
  qe::features::Extractor ex(out.resources, seed_list, c.lang_pair);
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    auto fv = ex.extract(c.records[i], toks[i], manifest);
    out.values.push_back(fv.values);
    out.rows.push_back(std::move(fv));
  }
  if (with_labels) {
    const auto scores = qe::meteor::score_corpus(c, meteor_config(o));
    for (const auto& e : scores.entries) {
      if (!e.score) {
        throw std::runtime_error("cannot label utterance " + e.id + ": " +
                                 e.error);
      }
      out.labels.push_back(e.score->score);
    }
  }
  return out;
}

int cmd_ingest(const CommonOpts& o) {
  for (const auto& path : o.corpus_paths) {
    const auto c = qe::corpus::load_corpus(path);
    std::cout << path << ": " << c.records.size() << " records, "
              << c.lang_pair.str() << "\n";
  }
  return 0;
}

int cmd_score(const CommonOpts& o) {
  const auto c = qe::corpus::load_corpus(o.corpus_paths.at(0));
  const auto scores = qe::meteor::score_corpus(c, meteor_config(o));
  auto out = open_out(o.out);
  out << "utterance_id\tmeteor\tmatches\tchunks\n";
  bool failed = false;
  for (const auto& e : scores.entries) {
    if (e.score) {
      out << e.id << '\t' << format_double(e.score->score) << '\t'
          << e.score->matches << '\t' << e.score->chunks << '\n';
    } else {
      failed = true;
      std::cerr << "error: " << e.id << ": " << e.error << "\n";
    }
  }
  std::cout << "scored " << scores.scored << "/" << scores.entries.size()
            << " records, mean METEOR " << format_double(scores.mean) << "\n";
  return failed ? 1 : 0;
}

int cmd_extract(const CommonOpts& o, const std::string& manifest_name,
                const std::string& resources_path, bool with_labels) {
  const auto c = qe::corpus::load_corpus(o.corpus_paths.at(0));
  std::optional<qe::features::QeResources> res;
  if (!resources_path.empty()) {
    std::ifstream in(resources_path);
    if (!in) throw std::runtime_error("cannot open resources: " + resources_path);
    json j;
    in >> j;
    res = qe::features::resources_from_json(j);
  }
  const auto lf = extract_corpus(c, manifest_by_name(manifest_name), o,
                                 res ? &*res : nullptr, with_labels);
  auto out = open_out(o.out);
  qe::features::write_feature_tsv(out, lf.manifest, lf.rows,
                                  with_labels ? &lf.labels : nullptr);
  return 0;
}

int cmd_train(const CommonOpts& o, const std::string& manifest_name,
              const std::string& resources_out) {
  const auto c = qe::corpus::load_corpus(o.corpus_paths.at(0));
  const auto lf = extract_corpus(c, manifest_by_name(manifest_name), o, nullptr,
                                 /*with_labels=*/true);
  const auto hp = fixed_hp(o, lf.manifest.size());
  const auto model =
      qe::svr::fit_standardized(lf.values, lf.labels, hp, lf.manifest.name);
  ensure_parent_dir(o.out);
  qe::svr::save_model(model, o.out);
  if (!resources_out.empty()) {
    auto out = open_out(resources_out);
    out << qe::features::resources_to_json(lf.resources).dump(2) << "\n";
  }
  std::cout << "trained " << lf.manifest.name << " model on "
            << c.records.size() << " records (" << model.support.size()
            << " support vectors)\n";
  return 0;
}

int cmd_predict(const CommonOpts& o, const std::string& model_path,
                const std::string& resources_path,
                const std::string& manifest_flag, bool clamp) {
  const auto model = qe::svr::load_model(model_path);
  if (!manifest_flag.empty() && manifest_flag != model.manifest_name) {
    throw std::runtime_error("manifest mismatch: model was trained with '" +
                             model.manifest_name + "', flags request '" +
                             manifest_flag + "'");
  }
  std::ifstream in(resources_path);
  if (!in) throw std::runtime_error("cannot open resources: " + resources_path);
  json j;
  in >> j;
  const auto res = qe::features::resources_from_json(j);

  const auto c = qe::corpus::load_corpus(o.corpus_paths.at(0));
  const auto manifest = manifest_by_name(model.manifest_name);
  const auto fillers = o.lexicon_path.empty()
                           ? qe::corpus::default_filler_lexicon(c.lang_pair.tgt)
                           : qe::corpus::load_filler_lexicon(o.lexicon_path);
  const auto seed_list =
      o.seedlist_path.empty()
          ? qe::features::default_seed_list(c.lang_pair.tgt)
          : qe::features::load_seed_list(o.seedlist_path, c.lang_pair.tgt);
  qe::features::Extractor ex(res, seed_list, c.lang_pair);

  auto out = open_out(o.out);
  out << "utterance_id\tprediction\n";
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const auto toks = qe::features::tokenize_record(c.records[i], fillers);
    const auto fv = ex.extract(c.records[i], toks, manifest);
    out << c.records[i].id << '\t'
        << format_double(model.predict(fv.values, clamp)) << '\n';
  }
  return 0;
}

int cmd_synth(const CommonOpts& o, int n, const std::string& lang_pair,
              const std::string& profile_name, const std::string& deg_out) {
  const auto pair = qe::corpus::LangPair::parse(lang_pair);
  const auto profile = qe::eval::DegradationProfile::parse(profile_name);
  std::vector<double> deltas;
  const auto c = qe::eval::generate_synthetic(n, pair, profile, o.seed, &deltas);
  ensure_parent_dir(o.out);
  qe::corpus::save_corpus(c, o.out);
  if (!deg_out.empty()) {
    auto out = open_out(deg_out);
    out << "utterance_id\tdegradation\n";
    for (std::size_t i = 0; i < c.records.size(); ++i) {
      out << c.records[i].id << '\t' << format_double(deltas[i]) << '\n';
    }
  }
  std::cout << "wrote " << c.records.size() << " records (" << pair.str()
            << ", profile " << profile.name << ") to " << o.out << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& o, bool with_ablation) {
  if (o.corpus_paths.empty()) {
    throw std::runtime_error("no --corpus given");
  }
  const std::string out_dir = o.out.empty() ? "." : o.out;
  fs::create_directories(out_dir);

  std::vector<qe::eval::ExperimentReport> reports;
  std::vector<qe::eval::AblationTable> ablations;
  for (const auto& path : o.corpus_paths) {
    const auto c = qe::corpus::load_corpus(path);
    auto cfg = experiment_config(o, c.lang_pair);
    const std::string name = fs::path(path).stem().string();
    if (!with_ablation) {
      reports.push_back(qe::eval::run_experiment(c, cfg, name));
      continue;
    }
    // One run covers both the score table and the ablation chain; folds,
    // labels and resources are shared across manifests.
    std::vector<std::string> selected;
    for (const auto& m : cfg.manifests) selected.push_back(m.name);
    for (const auto& m : qe::eval::ablation_manifests()) {
      bool present = false;
      for (const auto& have : cfg.manifests) present |= have.name == m.name;
      if (!present) cfg.manifests.push_back(m);
    }
    const auto full = qe::eval::run_experiment(c, cfg, name);
    reports.push_back(qe::eval::slice_report(full, selected));
    ablations.push_back(qe::eval::ablation_from_report(full));
  }

  json out_json;
  out_json["seed"] = o.seed;
  json rs = json::array();
  for (const auto& r : reports) rs.push_back(qe::eval::report_to_json(r));
  out_json["reports"] = rs;
  if (with_ablation) {
    json as = json::array();
    for (const auto& a : ablations) as.push_back(qe::eval::ablation_to_json(a));
    out_json["ablation"] = as;
  }
  {
    auto out = open_out((fs::path(out_dir) / "report.json").string());
    out << out_json.dump(2) << "\n";
  }
  std::string text = "Pearson's r by feature set\n\n" +
                     qe::eval::format_score_table(reports);
  const std::string sig = qe::eval::format_significance(reports);
  if (!sig.empty()) text += "\nPairwise bootstrap (one-sided)\n\n" + sig;
  {
    auto out = open_out((fs::path(out_dir) / "report.txt").string());
    out << text;
  }
  if (with_ablation) {
    auto out = open_out((fs::path(out_dir) / "ablation.txt").string());
    out << "Cumulative ablation, delta in mean test r vs proposed\n\n"
        << qe::eval::format_ablation_table(ablations);
  }
  std::cout << text;
  if (with_ablation) {
    std::cout << "\nCumulative ablation, delta in mean test r vs proposed\n\n"
              << qe::eval::format_ablation_table(ablations);
  }
  return 0;
}

int cmd_ablate(const CommonOpts& o) {
  if (o.corpus_paths.empty()) {
    throw std::runtime_error("no --corpus given");
  }
  const std::string out_dir = o.out.empty() ? "." : o.out;
  fs::create_directories(out_dir);
  std::vector<qe::eval::AblationTable> ablations;
  for (const auto& path : o.corpus_paths) {
    const auto c = qe::corpus::load_corpus(path);
    const auto cfg = experiment_config(o, c.lang_pair);
    ablations.push_back(
        qe::eval::ablate(c, cfg, fs::path(path).stem().string()));
  }
  json out_json;
  out_json["seed"] = o.seed;
  json as = json::array();
  for (const auto& a : ablations) as.push_back(qe::eval::ablation_to_json(a));
  out_json["ablation"] = as;
  {
    auto out = open_out((fs::path(out_dir) / "ablation.json").string());
    out << out_json.dump(2) << "\n";
  }
  const std::string text =
      "Cumulative ablation, delta in mean test r vs proposed\n\n" +
      qe::eval::format_ablation_table(ablations);
  {
    auto out = open_out((fs::path(out_dir) / "ablation.txt").string());
    out << text;
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality estimation for simultaneous interpretation"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string config_path;
  // The config file provides defaults; explicit flags override them.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  try {
    if (!config_path.empty()) apply_config_file(config_path, o);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }

  std::vector<std::string> flag_corpora;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with defaults");
    cmd->add_option("--corpus", flag_corpora, "corpus JSONL file(s)");
    cmd->add_option("--seed", o.seed, "run seed (all randomness derives from it)");
    cmd->add_option("--jobs", o.jobs, "worker threads for fold-level work");
    cmd->add_option("--lexicon", o.lexicon_path, "filler lexicon file");
    cmd->add_option("--seedlist", o.seedlist_path, "non-specific word seed list");
  };
  auto add_meteor = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", o.meteor_alpha, "METEOR alpha");
    cmd->add_option("--beta", o.meteor_beta, "METEOR beta");
    cmd->add_option("--gamma-pen", o.meteor_gamma_pen, "METEOR penalty weight");
  };
  auto add_svr = [&](CLI::App* cmd) {
    cmd->add_flag("--grid,!--no-grid", o.grid,
                  "grid-search hyperparameters on the dev fold");
    cmd->add_option("--C", o.C, "SVR regularization (with --no-grid)");
    cmd->add_option("--epsilon", o.epsilon, "SVR tube width (with --no-grid)");
    cmd->add_option("--gamma", o.kernel_gamma,
                    "RBF width (with --no-grid; 0 = 1/d)");
  };

  auto* ingest = app.add_subcommand("ingest", "validate a corpus file");
  add_common(ingest);

  auto* score = app.add_subcommand("score", "write METEOR labels as TSV");
  add_common(score);
  add_meteor(score);
  score->add_option("--out", o.out, "label TSV path")->required();

  std::string manifest_name = "proposed";
  std::string resources_path;
  bool with_labels = true;
  auto* extract = app.add_subcommand("extract", "write a feature matrix TSV");
  add_common(extract);
  add_meteor(extract);
  extract->add_option("--manifest", manifest_name,
                      "baseline | trimmed | proposed");
  extract->add_option("--resources", resources_path,
                      "resources JSON (default: fit on the corpus itself)");
  extract->add_flag("--with-labels,!--no-labels", with_labels,
                    "append the METEOR label column");
  extract->add_option("--out", o.out, "feature TSV path")->required();

  std::string resources_out;
  auto* train = app.add_subcommand("train", "train a single SVR model");
  add_common(train);
  add_meteor(train);
  add_svr(train);
  train->add_option("--manifest", manifest_name,
                    "baseline | trimmed | proposed");
  train->add_option("--resources-out", resources_out,
                    "also write the fitted resources JSON here");
  train->add_option("--out", o.out, "model JSON path")->required();

  std::string model_path;
  bool clamp = false;
  auto* predict = app.add_subcommand("predict", "predict scores with a model");
  add_common(predict);
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--resources", resources_path, "resources JSON")
      ->required();
  std::string predict_manifest;
  predict->add_option("--manifest", predict_manifest,
                      "must match the model when given");
  predict->add_flag("--clamp", clamp, "clamp predictions to [0,1]");
  predict->add_option("--out", o.out, "prediction TSV path")->required();

  int synth_n = 600;
  std::string synth_pair = "en-fr";
  std::string synth_profile = "mixed";
  std::string deg_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--config", config_path, "JSON config file with defaults");
  synth->add_option("--n", synth_n, "number of records (>= 100)");
  synth->add_option("--lang-pair", synth_pair, "en-ja | en-fr | en-it");
  synth->add_option("--profile", synth_profile, "mixed | fillers | length");
  synth->add_option("--seed", o.seed, "generator seed");
  synth->add_option("--deg-out", deg_out, "also write ground-truth degradation TSV");
  synth->add_option("--out", o.out, "corpus JSONL path")->required();

  auto* evaluate = app.add_subcommand(
      "evaluate", "k-fold experiment over the selected feature sets");
  add_common(evaluate);
  add_meteor(evaluate);
  add_svr(evaluate);
  evaluate->add_option("--manifests", o.manifests, "comma-separated feature sets");
  evaluate->add_option("--k", o.k, "number of folds");
  evaluate->add_option("--resamples", o.resamples, "bootstrap resamples");
  evaluate->add_option("--out", o.out, "output directory");

  auto* ablate_cmd = app.add_subcommand(
      "ablate", "cumulative ablation of the proposed feature set");
  add_common(ablate_cmd);
  add_meteor(ablate_cmd);
  add_svr(ablate_cmd);
  ablate_cmd->add_option("--k", o.k, "number of folds");
  ablate_cmd->add_option("--resamples", o.resamples, "bootstrap resamples");
  ablate_cmd->add_option("--out", o.out, "output directory");

  auto* experiment = app.add_subcommand(
      "experiment", "full pipeline: scores, CV, ablation, significance");
  add_common(experiment);
  add_meteor(experiment);
  add_svr(experiment);
  experiment->add_option("--manifests", o.manifests,
                         "comma-separated feature sets");
  experiment->add_option("--k", o.k, "number of folds");
  experiment->add_option("--resamples", o.resamples, "bootstrap resamples");
  experiment->add_option("--out", o.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (!flag_corpora.empty()) o.corpus_paths = flag_corpora;

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(o);
    if (app.got_subcommand(score)) return cmd_score(o);
    if (app.got_subcommand(extract)) {
      return cmd_extract(o, manifest_name, resources_path, with_labels);
    }
    if (app.got_subcommand(train)) return cmd_train(o, manifest_name, resources_out);
    if (app.got_subcommand(predict)) {
      return cmd_predict(o, model_path, resources_path, predict_manifest, clamp);
    }
    if (app.got_subcommand(synth)) {
      return cmd_synth(o, synth_n, synth_pair, synth_profile, deg_out);
    }
    if (app.got_subcommand(evaluate)) return cmd_evaluate(o, false);
    if (app.got_subcommand(ablate_cmd)) return cmd_ablate(o);
    if (app.got_subcommand(experiment)) return cmd_evaluate(o, true);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
