#include "qe/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "qe/rng.hpp"

namespace qe::eval {

FoldPlan make_folds(int n, int k, std::uint64_t seed) {
  // The dev set is the cyclically next test slice, so below three folds
  // either dev would equal test (k=1) or no training data would remain (k=2).
  if (k < 3) throw std::invalid_argument("make_folds: k must be >= 3");
  if (n < 3 * k) {
    throw std::invalid_argument("make_folds: need n >= 3k (n=" +
                                std::to_string(n) + ", k=" + std::to_string(k) +
                                ")");
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[i], idx[j]);
  }

  // Near-equal slices; the first n%k slices get one extra element.
  std::vector<std::pair<int, int>> slices;  // [begin, end)
  const int base = n / k, rem = n % k;
  int pos = 0;
  for (int i = 0; i < k; ++i) {
    const int len = base + (i < rem ? 1 : 0);
    slices.emplace_back(pos, pos + len);
    pos += len;
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (int i = 0; i < k; ++i) {
    Fold f;
    const auto [tb, te] = slices[i];
    const auto [db, de] = slices[(i + 1) % k];
    for (int p = tb; p < te; ++p) f.test.push_back(idx[p]);
    for (int p = db; p < de; ++p) f.dev.push_back(idx[p]);
    for (int p = 0; p < n; ++p) {
      const bool in_test = p >= tb && p < te;
      const bool in_dev = p >= db && p < de;
      if (!in_test && !in_dev) f.train.push_back(idx[p]);
    }
    std::sort(f.train.begin(), f.train.end());
    std::sort(f.dev.begin(), f.dev.end());
    std::sort(f.test.begin(), f.test.end());
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length series, n >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("pearson: zero variance input");
  }
  return sxy / std::sqrt(sxx * syy);
}

SignificanceResult paired_bootstrap(const std::vector<double>& y_true,
                                    const std::vector<double>& pred_a,
                                    const std::vector<double>& pred_b,
                                    int resamples, std::uint64_t seed,
                                    std::string name_a, std::string name_b) {
  const std::size_t n = y_true.size();
  if (pred_a.size() != n || pred_b.size() != n) {
    throw std::invalid_argument("paired_bootstrap: length mismatch");
  }
  if (n < 2) {
    throw std::invalid_argument("paired_bootstrap: need at least 2 items");
  }
  if (resamples < 1000) {
    throw std::invalid_argument("paired_bootstrap: need >= 1000 resamples");
  }

  Rng rng(seed);
  std::vector<double> yt(n), pa(n), pb(n);
  int not_better = 0, valid = 0, skipped = 0;
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.below(n);
      yt[i] = y_true[j];
      pa[i] = pred_a[j];
      pb[i] = pred_b[j];
    }
    try {
      const double ra = pearson(pa, yt);
      const double rb = pearson(pb, yt);
      ++valid;
      if (ra <= rb) ++not_better;
    } catch (const UndefinedCorrelation&) {
      ++skipped;
    }
  }
  if (valid == 0) {
    throw UndefinedCorrelation(
        "paired_bootstrap: every resample had undefined correlation");
  }
  SignificanceResult out;
  out.system_a = std::move(name_a);
  out.system_b = std::move(name_b);
  out.p_value = static_cast<double>(not_better) / static_cast<double>(valid);
  out.resamples = resamples;
  out.skipped = skipped;
  return out;
}

const ManifestResult* ExperimentReport::find(const std::string& name) const {
  for (const auto& m : manifests) {
    if (m.manifest == name) return &m;
  }
  return nullptr;
}

namespace {

struct FoldOutput {
  std::vector<FoldResult> per_manifest;  // aligned with cfg.manifests
  std::vector<std::vector<double>> test_pred;
};

FoldOutput run_fold(const corpus::Corpus& c,
                    const std::vector<features::TokenizedRecord>& toks,
                    const std::vector<double>& labels, const Fold& fold,
                    int fold_index, const ExperimentConfig& cfg,
                    const features::SeedList& seed_list) {
  const auto resources =
      features::build_resources(toks, fold.train, cfg.model1_iterations);
  features::Extractor extractor(resources, seed_list, c.lang_pair);

  // One superset extraction per record, sliced per manifest below.
  std::vector<std::string> master_ids = features::FeatureManifest::baseline().features;
  for (const auto& id : features::FeatureManifest::proposed().features) {
    if (std::find(master_ids.begin(), master_ids.end(), id) == master_ids.end()) {
      master_ids.push_back(id);
    }
  }
  const auto master =
      features::FeatureManifest::custom("master", master_ids);

  auto extract_rows = [&](const std::vector<int>& idxs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(idxs.size());
    for (int i : idxs) {
      rows.push_back(
          extractor.extract(c.records[i], toks[i], master).values);
    }
    return rows;
  };
  const auto train_master = extract_rows(fold.train);
  const auto dev_master = extract_rows(fold.dev);
  const auto test_master = extract_rows(fold.test);

  auto labels_of = [&](const std::vector<int>& idxs) {
    std::vector<double> out;
    out.reserve(idxs.size());
    for (int i : idxs) out.push_back(labels[i]);
    return out;
  };
  const auto train_y = labels_of(fold.train);
  const auto dev_y = labels_of(fold.dev);
  const auto test_y = labels_of(fold.test);

  FoldOutput out;
  for (const auto& manifest : cfg.manifests) {
    std::vector<std::size_t> cols;
    for (const auto& id : manifest.features) {
      const auto it = std::find(master_ids.begin(), master_ids.end(), id);
      if (it == master_ids.end()) {
        throw std::invalid_argument("unknown feature id in manifest: " + id);
      }
      cols.push_back(static_cast<std::size_t>(it - master_ids.begin()));
    }
    auto slice = [&](const std::vector<std::vector<double>>& rows) {
      std::vector<std::vector<double>> out_rows;
      out_rows.reserve(rows.size());
      for (const auto& row : rows) {
        std::vector<double> r;
        r.reserve(cols.size());
        for (auto ci : cols) r.push_back(row[ci]);
        out_rows.push_back(std::move(r));
      }
      return out_rows;
    };
    const auto train_X = slice(train_master);
    const auto dev_X = slice(dev_master);
    const auto test_X = slice(test_master);

    svr::TrainedModel model;
    FoldResult fr;
    fr.fold = fold_index;
    if (cfg.fixed_hp) {
      svr::SvrHyperparams hp = *cfg.fixed_hp;
      if (hp.kernel_gamma <= 0.0) {
        hp.kernel_gamma = 1.0 / static_cast<double>(manifest.size());
      }
      model = svr::fit_standardized(train_X, train_y, hp, manifest.name);
      fr.hp = hp;
      std::vector<double> dev_pred;
      dev_pred.reserve(dev_X.size());
      for (const auto& x : dev_X) dev_pred.push_back(model.predict(x));
      try {
        fr.dev_r = pearson(dev_pred, dev_y);
      } catch (const UndefinedCorrelation&) {
        fr.dev_r = 0.0;
      }
    } else {
      auto gs = svr::grid_search(train_X, train_y, dev_X, dev_y,
                                 svr::default_grid(manifest.size()),
                                 manifest.name);
      model = std::move(gs.best_model);
      fr.hp = gs.best;
      for (const auto& cell : gs.cells) {
        if (cell.hp == gs.best && cell.dev_r) fr.dev_r = *cell.dev_r;
      }
    }

    std::vector<double> test_pred;
    test_pred.reserve(test_X.size());
    for (const auto& x : test_X) test_pred.push_back(model.predict(x));
    fr.test_r = pearson(test_pred, test_y);
    out.per_manifest.push_back(fr);
    out.test_pred.push_back(std::move(test_pred));
  }
  return out;
}

std::string config_digest(const corpus::Corpus& c, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["lang_pair"] = c.lang_pair.str();
  j["records"] = c.records.size();
  std::vector<std::string> names;
  for (const auto& m : cfg.manifests) names.push_back(m.name);
  j["manifests"] = names;
  j["k"] = cfg.k;
  j["seed"] = cfg.seed;
  j["meteor"] = {{"alpha", cfg.meteor.alpha},
                 {"beta", cfg.meteor.beta},
                 {"gamma_pen", cfg.meteor.gamma_pen}};
  j["grid"] = !cfg.fixed_hp.has_value();
  if (cfg.fixed_hp) {
    j["hp"] = {{"C", cfg.fixed_hp->C},
               {"epsilon", cfg.fixed_hp->epsilon},
               {"kernel_gamma", cfg.fixed_hp->kernel_gamma}};
  }
  j["model1_iterations"] = cfg.model1_iterations;
  j["bootstrap_resamples"] = cfg.bootstrap_resamples;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace

ExperimentReport run_experiment(const corpus::Corpus& c,
                                const ExperimentConfig& cfg,
                                std::string corpus_name) {
  if (cfg.manifests.empty()) {
    throw std::invalid_argument("run_experiment: no manifests selected");
  }
  const auto seed_list = cfg.seed_list
                             ? *cfg.seed_list
                             : features::default_seed_list(c.lang_pair.tgt);
  const auto fillers = cfg.fillers
                           ? *cfg.fillers
                           : corpus::default_filler_lexicon(c.lang_pair.tgt);

  ExperimentReport report;
  report.corpus_name =
      corpus_name.empty() ? c.lang_pair.str() : std::move(corpus_name);
  report.lang_pair = c.lang_pair.str();
  report.records = c.records.size();
  report.seed = cfg.seed;
  report.config_digest = config_digest(c, cfg);

  // Labels: METEOR of interpreter output against the reference. Any record
  // that cannot be scored aborts the run; a partial report misleads.
  const auto scores = meteor::score_corpus(c, cfg.meteor);
  for (const auto& e : scores.entries) {
    if (!e.score) {
      throw std::runtime_error("run_experiment: cannot label utterance " +
                               e.id + ": " + e.error);
    }
    report.labels.push_back(e.score->score);
  }

  std::vector<features::TokenizedRecord> toks;
  toks.reserve(c.records.size());
  for (const auto& r : c.records) {
    toks.push_back(features::tokenize_record(r, fillers));
  }

  const auto plan = make_folds(static_cast<int>(c.records.size()), cfg.k,
                               sub_seed(cfg.seed, "folds"));

  // Folds are independent; run them on up to cfg.jobs threads. Results land
  // in per-fold slots, so assembly order (and output bytes) never depend on
  // the job count.
  std::vector<FoldOutput> outputs(plan.folds.size());
  std::vector<std::string> errors(plan.folds.size());
  {
    const int jobs = std::max(1, cfg.jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t f = next.fetch_add(1);
        if (f >= plan.folds.size()) break;
        try {
          outputs[f] = run_fold(c, toks, report.labels, plan.folds[f],
                                static_cast<int>(f), cfg, seed_list);
        } catch (const std::exception& ex) {
          errors[f] = ex.what();
        }
      }
    };
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
  }
  for (std::size_t f = 0; f < errors.size(); ++f) {
    if (!errors[f].empty()) {
      throw std::runtime_error("run_experiment: fold " + std::to_string(f) +
                               " failed: " + errors[f]);
    }
  }

  for (std::size_t mi = 0; mi < cfg.manifests.size(); ++mi) {
    ManifestResult mr;
    mr.manifest = cfg.manifests[mi].name;
    mr.pooled_pred.assign(c.records.size(), 0.0);
    double sum_r = 0.0;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const auto& fr = outputs[f].per_manifest[mi];
      mr.folds.push_back(fr);
      sum_r += fr.test_r;
      const auto& pred = outputs[f].test_pred[mi];
      for (std::size_t t = 0; t < plan.folds[f].test.size(); ++t) {
        mr.pooled_pred[plan.folds[f].test[t]] = pred[t];
      }
    }
    mr.mean_test_r = sum_r / static_cast<double>(plan.folds.size());
    report.manifests.push_back(std::move(mr));
  }

  // Pairwise bootstrap of the proposed system against each alternative.
  const auto* proposed = report.find("proposed");
  if (proposed) {
    for (const auto& other : {std::string("trimmed"), std::string("baseline")}) {
      const auto* rival = report.find(other);
      if (!rival) continue;
      report.significance.push_back(paired_bootstrap(
          report.labels, proposed->pooled_pred, rival->pooled_pred,
          cfg.bootstrap_resamples, sub_seed(cfg.seed, "bootstrap"),
          "proposed", other));
    }
  }
  return report;
}

std::vector<features::FeatureManifest> ablation_manifests() {
  using features::FeatureManifest;
  std::vector<FeatureManifest> out;
  FeatureManifest cur = FeatureManifest::proposed();
  out.push_back(cur);
  auto remove = [&](const std::string& name,
                    const std::vector<std::string>& ids) {
    std::vector<std::string> kept;
    for (const auto& id : cur.features) {
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
        kept.push_back(id);
      }
    }
    cur = FeatureManifest::custom(name, kept);
    out.push_back(cur);
  };
  remove("wo_cog", {"interp_cognate_ratio"});
  remove("wo_spec", {"interp_nonspecific_ratio"});
  remove("wo_fill", {"interp_pause_ratio", "interp_filler_ratio",
                     "interp_incomplete_ratio"});
  remove("wo_len", {"len_diff_ratio"});
  return out;
}

AblationTable ablation_from_report(const ExperimentReport& report) {
  static const std::vector<std::pair<std::string, std::string>> kColumns = {
      {"wo_cog", "w/o cog"},
      {"wo_spec", "w/o spec"},
      {"wo_fill", "w/o fill"},
      {"wo_len", "w/o len"},
  };
  const auto* proposed = report.find("proposed");
  if (!proposed) {
    throw std::invalid_argument(
        "ablation_from_report: report lacks the proposed manifest");
  }
  AblationTable table;
  table.corpus_name = report.corpus_name;
  table.proposed_r = proposed->mean_test_r;
  for (const auto& [name, label] : kColumns) {
    const auto* mr = report.find(name);
    if (!mr) {
      throw std::invalid_argument(
          "ablation_from_report: report lacks manifest " + name);
    }
    AblationColumn col;
    col.label = label;
    col.mean_test_r = mr->mean_test_r;
    col.delta = mr->mean_test_r - table.proposed_r;
    table.columns.push_back(std::move(col));
  }
  return table;
}

AblationTable ablate(const corpus::Corpus& c, const ExperimentConfig& cfg,
                     std::string corpus_name) {
  ExperimentConfig run_cfg = cfg;
  run_cfg.manifests = ablation_manifests();
  return ablation_from_report(run_experiment(c, run_cfg, corpus_name));
}

ExperimentReport slice_report(const ExperimentReport& full,
                              const std::vector<std::string>& names) {
  ExperimentReport out = full;
  out.manifests.clear();
  for (const auto& name : names) {
    const auto* mr = full.find(name);
    if (!mr) {
      throw std::invalid_argument("slice_report: report lacks manifest " +
                                  name);
    }
    out.manifests.push_back(*mr);
  }
  return out;
}

nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["corpus"] = r.corpus_name;
  j["lang_pair"] = r.lang_pair;
  j["records"] = r.records;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  nlohmann::json ms = nlohmann::json::object();
  for (const auto& m : r.manifests) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : m.folds) {
      folds.push_back({{"fold", f.fold},
                       {"dev_r", f.dev_r},
                       {"test_r", f.test_r},
                       {"hp",
                        {{"C", f.hp.C},
                         {"epsilon", f.hp.epsilon},
                         {"kernel_gamma", f.hp.kernel_gamma}}}});
    }
    ms[m.manifest] = {{"mean_test_r", m.mean_test_r}, {"folds", folds}};
  }
  j["manifests"] = ms;
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& s : r.significance) {
    sig.push_back({{"system_a", s.system_a},
                   {"system_b", s.system_b},
                   {"p_value", s.p_value},
                   {"resamples", s.resamples},
                   {"skipped", s.skipped}});
  }
  j["significance"] = sig;
  return j;
}

nlohmann::json ablation_to_json(const AblationTable& t) {
  nlohmann::json j;
  j["corpus"] = t.corpus_name;
  j["proposed_r"] = t.proposed_r;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : t.columns) {
    cols.push_back({{"label", c.label},
                    {"mean_test_r", c.mean_test_r},
                    {"delta", c.delta}});
  }
  j["columns"] = cols;
  return j;
}

namespace {

std::string fixed3(double v, bool sign = false) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), sign ? "%+.3f" : "%.3f", v);
  return buf;
}

}  // namespace

std::string format_score_table(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  if (reports.empty()) return "";
  std::size_t name_w = 8;
  for (const auto& r : reports) name_w = std::max(name_w, r.corpus_name.size());
  out << std::string(name_w, ' ');
  for (const auto& m : reports.front().manifests) {
    out << "  " << m.manifest;
  }
  out << "\n";
  for (const auto& r : reports) {
    out << r.corpus_name << std::string(name_w - r.corpus_name.size(), ' ');
    for (const auto& m : r.manifests) {
      const std::string v = fixed3(m.mean_test_r);
      out << "  " << std::string(m.manifest.size() > v.size()
                                     ? m.manifest.size() - v.size()
                                     : 0,
                                 ' ')
          << v;
    }
    out << "\n";
  }
  return out.str();
}

std::string format_ablation_table(const std::vector<AblationTable>& tables) {
  std::ostringstream out;
  if (tables.empty()) return "";
  std::size_t name_w = 8;
  for (const auto& t : tables) name_w = std::max(name_w, t.corpus_name.size());
  out << std::string(name_w, ' ');
  for (const auto& c : tables.front().columns) out << "  " << c.label;
  out << "\n";
  std::vector<double> sums(tables.front().columns.size(), 0.0);
  for (const auto& t : tables) {
    out << t.corpus_name << std::string(name_w - t.corpus_name.size(), ' ');
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      const std::string v = fixed3(t.columns[i].delta, true);
      const std::size_t w = t.columns[i].label.size();
      out << "  " << std::string(w > v.size() ? w - v.size() : 0, ' ') << v;
      sums[i] += t.columns[i].delta;
    }
    out << "\n";
  }
  out << "Average" << std::string(name_w - 7, ' ');
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const std::string v =
        fixed3(sums[i] / static_cast<double>(tables.size()), true);
    const std::size_t w = tables.front().columns[i].label.size();
    out << "  " << std::string(w > v.size() ? w - v.size() : 0, ' ') << v;
  }
  out << "\n";
  return out.str();
}

std::string format_significance(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    for (const auto& s : r.significance) {
      out << r.corpus_name << ": " << s.system_a << " vs " << s.system_b
          << ": p = " << fixed3(s.p_value) << " (" << s.resamples
          << " resamples";
      if (s.skipped > 0) out << ", " << s.skipped << " skipped";
      out << ")\n";
    }
  }
  return out.str();
}

}  // namespace qe::eval
