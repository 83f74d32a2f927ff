#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "qe/corpus.hpp"
#include "qe/lm.hpp"

namespace qe::features {

// Canonical sentence-level feature manifests. Identifiers are stable strings
// so ablation and serialization stay unambiguous.
//
// baseline (17):
//   src_token_count            number of source tokens
//   tgt_token_count            number of interpreter tokens
//   src_avg_token_length       mean source token length in characters
//   src_lm_logprob             length-normalized source LM log-probability
//   tgt_lm_logprob             same for the interpreter side, under the
//                              reference-trained LM (empty side floors at the
//                              LM's minimum training sentence logprob - 1)
//   tgt_type_token_ratio       distinct / total interpreter tokens
//   src_translations_020       mean translations per source content word with
//                              t > 0.2
//   src_translations_001_invfreq
//                              mean translations with t > 0.01, each word
//                              weighted by 1 / max(1, training unigram count)
//   src_unigram_q1_pct ...     fraction of source n-grams in the lowest /
//   src_trigram_q4_pct         highest training frequency quartile (n = 1..3)
//   src_seen_unigram_pct       fraction of source tokens seen in training
//   src_punct_count            punctuation tokens in the source
//   tgt_punct_count            punctuation tokens in the interpreter output
//
// trimmed (12): baseline minus the source bigram/trigram quartile features
// and the source punctuation count.
//
// proposed (18): trimmed plus
//   interp_pause_ratio         pause marks per interpreter token
//   interp_filler_ratio        filler words per interpreter token
//   interp_incomplete_ratio    incomplete words per interpreter token
//   interp_nonspecific_ratio   seed-list (pronoun/demonstrative) fraction
//   interp_cognate_ratio       quasi-cognate fraction (katakana for en-ja)
//   len_diff_ratio             |source - target| content length over source
struct FeatureManifest {
  std::string name;
  std::vector<std::string> features;

  static FeatureManifest baseline();
  static FeatureManifest trimmed();
  static FeatureManifest proposed();
  static FeatureManifest custom(std::string name,
                                std::vector<std::string> ids);

  std::size_t size() const { return features.size(); }
  bool operator==(const FeatureManifest&) const = default;
};

struct FeatureVector {
  std::string utterance_id;
  std::string manifest_name;
  std::vector<double> values;
};

struct SeedList {
  std::string lang;
  std::unordered_set<std::string> words;  // lowercase
};

SeedList default_seed_list(std::string_view lang);
SeedList load_seed_list(const std::string& path, std::string_view lang);

// Tokenization shared by resources and extraction, cached per record since it
// does not depend on the training fold.
struct TokenizedRecord {
  std::vector<std::string> src_tokens;
  std::vector<std::string> interp_tokens;  // with annotation markers kept
  std::vector<corpus::AnnotationSpan> spans;
  std::vector<std::string> ref_tokens;
  // Case-folded copies; resources are trained and queried on these.
  std::vector<std::string> src_folded;
  std::vector<std::string> interp_folded;
  std::vector<std::string> ref_folded;
};

TokenizedRecord tokenize_record(const corpus::UtteranceRecord& r,
                                const corpus::FillerLexicon& fillers);

// Statistical resources behind the baseline features. Trained on the
// training fold only: source sides feed the source LM and quartiles,
// reference sides feed the target LM, source/reference pairs feed Model 1.
// All resource text is case-folded.
struct QeResources {
  lm::NgramModel src_lm;
  lm::NgramModel tgt_lm;
  lm::FrequencyQuartiles src_quartiles;
  lm::LexicalTable lex;
};

QeResources build_resources(const std::vector<TokenizedRecord>& records,
                            const std::vector<int>& train_indices,
                            int model1_iterations = 5);

nlohmann::json resources_to_json(const QeResources& r);  // "qeres-v1"
QeResources resources_from_json(const nlohmann::json& j);

// Interpreter-specific features.
struct Disfluency {
  double pause_ratio = 0.0;
  double filler_ratio = 0.0;
  double incomplete_ratio = 0.0;
};

Disfluency feat_disfluency(const std::vector<std::string>& interp_tokens,
                           const std::vector<corpus::AnnotationSpan>& spans);

double feat_nonspecific(const std::vector<std::string>& interp_tokens,
                        const SeedList& seed);

// en-fr / en-it: fraction of interpreter content tokens whose best
// orthographic similarity against any source token is >= 0.5.
// en-ja: fraction of interpreter content tokens that are >= 50% katakana.
double feat_cognates(const std::vector<std::string>& source_tokens,
                     const std::vector<std::string>& interp_tokens,
                     const corpus::LangPair& pair);

// (source/target content length ratio, source/target punctuation ratio with
// zero guards, absolute content length difference over source length)
struct LengthPunct {
  double len_ratio = 0.0;
  double punct_ratio = 0.0;
  double len_diff_ratio = 0.0;
};

LengthPunct feat_length_punct(const std::vector<std::string>& source_tokens,
                              const std::vector<std::string>& interp_tokens);

class Extractor {
 public:
  Extractor(const QeResources& res, const SeedList& seed,
            const corpus::LangPair& pair);

  FeatureVector extract(const corpus::UtteranceRecord& r,
                        const TokenizedRecord& toks,
                        const FeatureManifest& manifest) const;

 private:
  const QeResources* res_;
  const SeedList* seed_;
  corpus::LangPair pair_;
};

FeatureVector extract_baseline(const corpus::UtteranceRecord& r,
                               const TokenizedRecord& toks,
                               const QeResources& res,
                               const SeedList& seed,
                               const corpus::LangPair& pair);
FeatureVector extract_trimmed(const corpus::UtteranceRecord& r,
                              const TokenizedRecord& toks,
                              const QeResources& res, const SeedList& seed,
                              const corpus::LangPair& pair);
FeatureVector extract_proposed(const corpus::UtteranceRecord& r,
                               const TokenizedRecord& toks,
                               const QeResources& res, const SeedList& seed,
                               const corpus::LangPair& pair);

// Per-feature z-scoring fit on training vectors only. Zero-variance columns
// pass through with the deviation treated as 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> apply(const std::vector<double>& row) const;
};

// Tab-separated interchange: header row of identifiers, utterance_id first,
// label last when provided.
void write_feature_tsv(std::ostream& out, const FeatureManifest& manifest,
                       const std::vector<FeatureVector>& rows,
                       const std::vector<double>* labels);

}  // namespace qe::features
