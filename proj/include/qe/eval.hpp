#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qe/corpus.hpp"
#include "qe/features.hpp"
#include "qe/meteor.hpp"
#include "qe/svr.hpp"

namespace qe::eval {

inline constexpr std::uint64_t kDefaultSeed = 1729;

struct UndefinedCorrelation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Fold {
  std::vector<int> train, dev, test;
};

struct FoldPlan {
  int k = 10;
  std::uint64_t seed = kDefaultSeed;
  std::vector<Fold> folds;
};

// Seeded shuffle, then fold i tests on slice i and developes on the next
// slice cyclically; the rest trains. Test slices partition the corpus.
FoldPlan make_folds(int n, int k, std::uint64_t seed);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct SignificanceResult {
  std::string system_a;
  std::string system_b;
  double p_value = 1.0;
  int resamples = 0;
  int skipped = 0;  // resamples with undefined correlation
};

// One-sided pairwise bootstrap over test items: p is the fraction of
// resamples where system A's Pearson r does not beat system B's.
SignificanceResult paired_bootstrap(const std::vector<double>& y_true,
                                    const std::vector<double>& pred_a,
                                    const std::vector<double>& pred_b,
                                    int resamples, std::uint64_t seed,
                                    std::string name_a = "A",
                                    std::string name_b = "B");

struct ExperimentConfig {
  std::vector<features::FeatureManifest> manifests;
  meteor::MeteorConfig meteor;
  int k = 10;
  std::uint64_t seed = kDefaultSeed;
  std::optional<svr::SvrHyperparams> fixed_hp;  // skips the grid when set
  int model1_iterations = 5;
  int bootstrap_resamples = 10000;
  int jobs = 1;
  // Target-language word lists; defaults resolved from the corpus when empty.
  std::optional<features::SeedList> seed_list;
  std::optional<corpus::FillerLexicon> fillers;
};

struct FoldResult {
  int fold = 0;
  double dev_r = 0.0;
  double test_r = 0.0;
  svr::SvrHyperparams hp;
};

struct ManifestResult {
  std::string manifest;
  std::vector<FoldResult> folds;
  double mean_test_r = 0.0;
  std::vector<double> pooled_pred;  // indexed like the corpus
};

struct ExperimentReport {
  std::string corpus_name;
  std::string lang_pair;
  std::size_t records = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<double> labels;  // METEOR, indexed like the corpus
  std::vector<ManifestResult> manifests;
  std::vector<SignificanceResult> significance;

  const ManifestResult* find(const std::string& name) const;
};

// Per fold: trains resources and the standardizer on the train slice only,
// grid-searches on dev, reports test r; aggregates the unweighted mean over
// folds per manifest. A failed fold aborts the run.
ExperimentReport run_experiment(const corpus::Corpus& c,
                                const ExperimentConfig& cfg,
                                std::string corpus_name = "");

struct AblationColumn {
  std::string label;       // "w/o cog", ...
  double mean_test_r = 0.0;
  double delta = 0.0;      // versus the proposed manifest
};

struct AblationTable {
  std::string corpus_name;
  double proposed_r = 0.0;
  std::vector<AblationColumn> columns;
};

// Cumulative chain proposed -> w/o cog -> w/o spec -> w/o fill -> w/o len,
// each column reported as the delta in mean test r versus proposed.
AblationTable ablate(const corpus::Corpus& c, const ExperimentConfig& cfg,
                     std::string corpus_name = "");

std::vector<features::FeatureManifest> ablation_manifests();

// Restricts a report to the named manifests (fold plans, labels and
// significance are manifest-independent, so the numbers are unchanged).
ExperimentReport slice_report(const ExperimentReport& full,
                              const std::vector<std::string>& names);

// Reads the ablation columns out of a report that ran the whole chain.
AblationTable ablation_from_report(const ExperimentReport& full);

// Synthetic corpus generator: references from a seeded phrase table, interp
// = reference corrupted by a per-utterance degradation level delta in [0,1].
struct DegradationProfile {
  std::string name = "mixed";
  double dropout = 0.0;
  double filler_insert = 0.0;
  double filler_replace = 0.0;
  double pause_insert = 0.0;
  double pronoun_replace = 0.0;
  double cognate_replace = 0.0;  // katakana substitution for en-ja
  double incomplete_replace = 0.0;
  // Reference-side free-translation noise: the reference renders words the
  // interpreter never saw. Invisible to every feature (they read only the
  // source and the interpreter output), so it bounds the reachable
  // correlation the way real references do. Scales with delta.
  double ref_noise = 0.0;
  // Per-utterance degradation is uniform in [0,1] unless pinned here.
  std::optional<double> fixed_delta;

  static DegradationProfile mixed();
  static DegradationProfile fillers_only();
  static DegradationProfile length_only();
  static DegradationProfile parse(std::string_view name);
};

corpus::Corpus generate_synthetic(int n, const corpus::LangPair& pair,
                                  const DegradationProfile& profile,
                                  std::uint64_t seed,
                                  std::vector<double>* deltas = nullptr);

// Report output: an aligned-text table per shape plus a machine-readable
// JSON document; both byte-stable given (corpus, config, seed).
nlohmann::json report_to_json(const ExperimentReport& r);
nlohmann::json ablation_to_json(const AblationTable& t);
std::string format_score_table(const std::vector<ExperimentReport>& reports);
std::string format_ablation_table(const std::vector<AblationTable>& tables);
std::string format_significance(const std::vector<ExperimentReport>& reports);

}  // namespace qe::eval
