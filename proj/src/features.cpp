#include "qe/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "qe/text.hpp"

namespace qe::features {

namespace {

const std::vector<std::string> kBaselineIds = {
    "src_token_count",
    "tgt_token_count",
    "src_avg_token_length",
    "src_lm_logprob",
    "tgt_lm_logprob",
    "tgt_type_token_ratio",
    "src_translations_020",
    "src_translations_001_invfreq",
    "src_unigram_q1_pct",
    "src_unigram_q4_pct",
    "src_bigram_q1_pct",
    "src_bigram_q4_pct",
    "src_trigram_q1_pct",
    "src_trigram_q4_pct",
    "src_seen_unigram_pct",
    "src_punct_count",
    "tgt_punct_count",
};

const std::vector<std::string> kTrimmedRemoved = {
    "src_bigram_q1_pct", "src_bigram_q4_pct", "src_trigram_q1_pct",
    "src_trigram_q4_pct", "src_punct_count",
};

const std::vector<std::string> kInterpreterIds = {
    "interp_pause_ratio",   "interp_filler_ratio",
    "interp_incomplete_ratio", "interp_nonspecific_ratio",
    "interp_cognate_ratio", "len_diff_ratio",
};

}  // namespace

FeatureManifest FeatureManifest::baseline() {
  return {"baseline", kBaselineIds};
}

FeatureManifest FeatureManifest::trimmed() {
  FeatureManifest m{"trimmed", {}};
  for (const auto& id : kBaselineIds) {
    if (std::find(kTrimmedRemoved.begin(), kTrimmedRemoved.end(), id) ==
        kTrimmedRemoved.end()) {
      m.features.push_back(id);
    }
  }
  return m;
}

FeatureManifest FeatureManifest::proposed() {
  FeatureManifest m = trimmed();
  m.name = "proposed";
  for (const auto& id : kInterpreterIds) m.features.push_back(id);
  return m;
}

FeatureManifest FeatureManifest::custom(std::string name,
                                        std::vector<std::string> ids) {
  return {std::move(name), std::move(ids)};
}

SeedList default_seed_list(std::string_view lang) {
  SeedList s;
  s.lang = std::string(lang);
  if (lang == "en") {
    s.words = {"he",   "she",  "it",    "they",  "them", "him",
               "her",  "this", "that",  "these", "those", "thing",
               "things", "stuff", "one", "ones"};
  } else if (lang == "fr") {
    s.words = {"il",    "elle",  "ils",   "elles", "lui",  "eux",
               "ce",    "cela",  "ça",    "ceci",  "celui", "celle",
               "ceux",  "celles", "chose", "choses", "truc", "on"};
  } else if (lang == "it") {
    s.words = {"lui",    "lei",    "loro",  "esso",  "essa",  "questo",
               "questa", "questi", "queste", "quello", "quella", "quelli",
               "quelle", "cosa",   "cose",  "roba",  "ciò"};
  } else if (lang == "ja") {
    s.words = {"これ", "それ", "あれ", "この", "その", "あの",
               "彼",   "彼女", "彼ら", "それら", "こと", "もの"};
  } else {
    throw std::invalid_argument("no default seed list for language '" +
                                std::string(lang) + "'");
  }
  return s;
}

SeedList load_seed_list(const std::string& path, std::string_view lang) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open seed list: " + path);
  SeedList s;
  s.lang = std::string(lang);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t start = line.find_first_not_of(" \t\r");
    while (start != std::string::npos) {
      std::size_t end = line.find_first_of(" \t\r", start);
      if (end == std::string::npos) end = line.size();
      s.words.insert(text::fold_case(line.substr(start, end - start)));
      start = line.find_first_not_of(" \t\r", end);
    }
  }
  if (s.words.empty()) {
    throw std::runtime_error("seed list is empty: " + path);
  }
  return s;
}

TokenizedRecord tokenize_record(const corpus::UtteranceRecord& r,
                                const corpus::FillerLexicon& fillers) {
  TokenizedRecord t;
  t.src_tokens = text::tokenize(r.source, r.lang_pair.src).tokens;
  auto annotated = corpus::parse_annotations(r.interp, r.lang_pair.tgt, fillers);
  t.interp_tokens = std::move(annotated.tokens);
  t.spans = std::move(annotated.spans);
  t.ref_tokens = text::tokenize(r.reference, r.lang_pair.tgt).tokens;
  auto fold_all = [](const std::vector<std::string>& in) {
    std::vector<std::string> out;
    out.reserve(in.size());
    for (const auto& tok : in) out.push_back(text::fold_case(tok));
    return out;
  };
  t.src_folded = fold_all(t.src_tokens);
  t.interp_folded = fold_all(t.interp_tokens);
  t.ref_folded = fold_all(t.ref_tokens);
  return t;
}

namespace {

std::vector<std::string> content_of(const std::vector<std::string>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) {
    if (!text::is_punctuation(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

QeResources build_resources(const std::vector<TokenizedRecord>& records,
                            const std::vector<int>& train_indices,
                            int model1_iterations) {
  if (train_indices.empty()) {
    throw std::runtime_error("build_resources: empty training fold");
  }
  std::vector<std::vector<std::string>> src_sents, ref_sents;
  lm::ParallelCorpus parallel;
  for (int idx : train_indices) {
    const auto& t = records.at(static_cast<std::size_t>(idx));
    src_sents.push_back(t.src_folded);
    ref_sents.push_back(t.ref_folded);
    parallel.emplace_back(content_of(t.src_folded), content_of(t.ref_folded));
  }
  QeResources res;
  res.src_lm = lm::train_ngram(src_sents, 3);
  res.tgt_lm = lm::train_ngram(ref_sents, 3);
  res.src_quartiles = lm::make_quartiles(res.src_lm);
  res.lex = lm::train_model1(parallel, model1_iterations);
  return res;
}

nlohmann::json resources_to_json(const QeResources& r) {
  nlohmann::json j;
  j["format"] = "qeres-v1";
  j["source_lm"] = lm::ngram_to_json(r.src_lm);
  j["target_lm"] = lm::ngram_to_json(r.tgt_lm);
  j["lexical"] = lm::lex_to_json(r.lex);
  return j;
}

QeResources resources_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "qeres-v1") {
    throw std::runtime_error("resources_from_json: unexpected format");
  }
  QeResources r;
  r.src_lm = lm::ngram_from_json(j.at("source_lm"));
  r.tgt_lm = lm::ngram_from_json(j.at("target_lm"));
  r.src_quartiles = lm::make_quartiles(r.src_lm);
  r.lex = lm::lex_from_json(j.at("lexical"));
  return r;
}

Disfluency feat_disfluency(const std::vector<std::string>& interp_tokens,
                           const std::vector<corpus::AnnotationSpan>& spans) {
  Disfluency d;
  if (interp_tokens.empty()) return d;
  const double n = static_cast<double>(interp_tokens.size());
  for (const auto& s : spans) {
    switch (s.kind) {
      case corpus::AnnotationKind::pause: d.pause_ratio += 1.0; break;
      case corpus::AnnotationKind::filler: d.filler_ratio += 1.0; break;
      case corpus::AnnotationKind::incomplete: d.incomplete_ratio += 1.0; break;
    }
  }
  d.pause_ratio /= n;
  d.filler_ratio /= n;
  d.incomplete_ratio /= n;
  return d;
}

double feat_nonspecific(const std::vector<std::string>& interp_tokens,
                        const SeedList& seed) {
  std::size_t content = 0, hits = 0;
  for (const auto& t : interp_tokens) {
    if (text::is_punctuation(t)) continue;
    ++content;
    if (seed.words.count(text::fold_case(t)) > 0) ++hits;
  }
  if (content == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(content);
}

double feat_cognates(const std::vector<std::string>& source_tokens,
                     const std::vector<std::string>& interp_tokens,
                     const corpus::LangPair& pair) {
  const std::string p = pair.str();
  const bool katakana = (p == "en-ja");
  if (!katakana && p != "en-fr" && p != "en-it") {
    throw std::invalid_argument("feat_cognates: unsupported language pair " + p);
  }
  std::size_t content = 0, hits = 0;
  std::vector<std::string> src_content;
  if (!katakana) src_content = content_of(source_tokens);
  for (const auto& t : interp_tokens) {
    if (text::is_punctuation(t)) continue;
    ++content;
    if (katakana) {
      if (text::katakana_fraction(t) >= 0.5) ++hits;
    } else {
      for (const auto& s : src_content) {
        if (text::orthographic_similarity(t, s) >= 0.5) {
          ++hits;
          break;
        }
      }
    }
  }
  if (content == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(content);
}

LengthPunct feat_length_punct(const std::vector<std::string>& source_tokens,
                              const std::vector<std::string>& interp_tokens) {
  double src_content = 0, tgt_content = 0, src_punct = 0, tgt_punct = 0;
  for (const auto& t : source_tokens) {
    (text::is_punctuation(t) ? src_punct : src_content) += 1.0;
  }
  for (const auto& t : interp_tokens) {
    (text::is_punctuation(t) ? tgt_punct : tgt_content) += 1.0;
  }
  LengthPunct lp;
  lp.len_ratio = src_content / std::max(1.0, tgt_content);
  lp.punct_ratio = src_punct / std::max(1.0, tgt_punct);
  lp.len_diff_ratio =
      std::abs(src_content - tgt_content) / std::max(1.0, src_content);
  return lp;
}

Extractor::Extractor(const QeResources& res, const SeedList& seed,
                     const corpus::LangPair& pair)
    : res_(&res), seed_(&seed), pair_(pair) {}

namespace {

double quartile_pct(const lm::NgramModel& m, const lm::FrequencyQuartiles& q,
                    const std::vector<std::string>& toks, int n,
                    lm::QuartileClass which) {
  const long long total =
      static_cast<long long>(toks.size()) - static_cast<long long>(n) + 1;
  if (total <= 0) return 0.0;
  long long hits = 0;
  for (long long i = 0; i < total; ++i) {
    std::vector<std::string> ng(toks.begin() + i, toks.begin() + i + n);
    if (lm::quartile_class(m, q, ng) == which) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

FeatureVector Extractor::extract(const corpus::UtteranceRecord& r,
                                 const TokenizedRecord& toks,
                                 const FeatureManifest& manifest) const {
  if (res_->src_lm.vocab_size == 0) {
    throw std::runtime_error("extract: missing resource: source language model");
  }
  if (res_->tgt_lm.vocab_size == 0) {
    throw std::runtime_error("extract: missing resource: target language model");
  }
  if (res_->lex.t.empty()) {
    throw std::runtime_error("extract: missing resource: lexical table");
  }

  const auto& src = toks.src_tokens;
  const auto& tgt = toks.interp_tokens;
  const auto src_content = content_of(toks.src_folded);

  std::unordered_map<std::string_view, double> v;

  v["src_token_count"] = static_cast<double>(src.size());
  v["tgt_token_count"] = static_cast<double>(tgt.size());

  double len_sum = 0;
  for (const auto& t : src) {
    len_sum += static_cast<double>(text::decode_utf8(t).size());
  }
  v["src_avg_token_length"] =
      src.empty() ? 0.0 : len_sum / static_cast<double>(src.size());

  v["src_lm_logprob"] = src.empty()
                            ? res_->src_lm.min_sentence_logprob - 1.0
                            : lm::logprob(res_->src_lm, toks.src_folded);
  v["tgt_lm_logprob"] = tgt.empty()
                            ? res_->tgt_lm.min_sentence_logprob - 1.0
                            : lm::logprob(res_->tgt_lm, toks.interp_folded);

  if (tgt.empty()) {
    v["tgt_type_token_ratio"] = 0.0;
  } else {
    std::unordered_set<std::string> types(toks.interp_folded.begin(),
                                          toks.interp_folded.end());
    v["tgt_type_token_ratio"] = static_cast<double>(types.size()) /
                                static_cast<double>(tgt.size());
  }

  double t020 = 0, t001 = 0;
  for (const auto& w : src_content) {
    t020 += lm::translations_per_word(res_->lex, w, 0.2);
    auto uni = res_->src_lm.counts[0].find(w);
    const double freq =
        uni == res_->src_lm.counts[0].end() ? 0.0 : static_cast<double>(uni->second);
    t001 += lm::translations_per_word(res_->lex, w, 0.01) / std::max(1.0, freq);
  }
  const double nc = std::max<std::size_t>(1, src_content.size());
  v["src_translations_020"] = t020 / static_cast<double>(nc);
  v["src_translations_001_invfreq"] = t001 / static_cast<double>(nc);

  const auto& q = res_->src_quartiles;
  v["src_unigram_q1_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 1, lm::QuartileClass::Q1);
  v["src_unigram_q4_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 1, lm::QuartileClass::Q4);
  v["src_bigram_q1_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 2, lm::QuartileClass::Q1);
  v["src_bigram_q4_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 2, lm::QuartileClass::Q4);
  v["src_trigram_q1_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 3, lm::QuartileClass::Q1);
  v["src_trigram_q4_pct"] =
      quartile_pct(res_->src_lm, q, toks.src_folded, 3, lm::QuartileClass::Q4);

  if (toks.src_folded.empty()) {
    v["src_seen_unigram_pct"] = 0.0;
  } else {
    std::size_t seen = 0;
    for (const auto& w : toks.src_folded) {
      if (res_->src_lm.counts[0].count(w) > 0) ++seen;
    }
    v["src_seen_unigram_pct"] = static_cast<double>(seen) /
                                static_cast<double>(toks.src_folded.size());
  }

  double src_punct = 0, tgt_punct = 0;
  for (const auto& t : src) src_punct += text::is_punctuation(t) ? 1.0 : 0.0;
  for (const auto& t : tgt) tgt_punct += text::is_punctuation(t) ? 1.0 : 0.0;
  v["src_punct_count"] = src_punct;
  v["tgt_punct_count"] = tgt_punct;

  const Disfluency d = feat_disfluency(tgt, toks.spans);
  v["interp_pause_ratio"] = d.pause_ratio;
  v["interp_filler_ratio"] = d.filler_ratio;
  v["interp_incomplete_ratio"] = d.incomplete_ratio;
  v["interp_nonspecific_ratio"] = feat_nonspecific(tgt, *seed_);
  v["interp_cognate_ratio"] = feat_cognates(src, tgt, pair_);
  v["len_diff_ratio"] = feat_length_punct(src, tgt).len_diff_ratio;

  FeatureVector fv;
  fv.utterance_id = r.id;
  fv.manifest_name = manifest.name;
  fv.values.reserve(manifest.features.size());
  for (const auto& id : manifest.features) {
    auto it = v.find(id);
    if (it == v.end()) {
      throw std::invalid_argument("extract: unknown feature id '" + id + "'");
    }
    if (!std::isfinite(it->second)) {
      throw std::logic_error("extract: non-finite value for feature '" + id +
                             "' in utterance " + r.id);
    }
    fv.values.push_back(it->second);
  }
  return fv;
}

namespace {

FeatureVector extract_with(const corpus::UtteranceRecord& r,
                           const TokenizedRecord& toks, const QeResources& res,
                           const SeedList& seed, const corpus::LangPair& pair,
                           const FeatureManifest& m) {
  return Extractor(res, seed, pair).extract(r, toks, m);
}

}  // namespace

FeatureVector extract_baseline(const corpus::UtteranceRecord& r,
                               const TokenizedRecord& toks,
                               const QeResources& res, const SeedList& seed,
                               const corpus::LangPair& pair) {
  return extract_with(r, toks, res, seed, pair, FeatureManifest::baseline());
}

FeatureVector extract_trimmed(const corpus::UtteranceRecord& r,
                              const TokenizedRecord& toks,
                              const QeResources& res, const SeedList& seed,
                              const corpus::LangPair& pair) {
  return extract_with(r, toks, res, seed, pair, FeatureManifest::trimmed());
}

FeatureVector extract_proposed(const corpus::UtteranceRecord& r,
                               const TokenizedRecord& toks,
                               const QeResources& res, const SeedList& seed,
                               const corpus::LangPair& pair) {
  return extract_with(r, toks, res, seed, pair, FeatureManifest::proposed());
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) {
    throw std::invalid_argument("Standardizer: need at least 2 vectors");
  }
  const std::size_t d = rows.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& row : rows) {
    if (row.size() != d) {
      throw std::invalid_argument("Standardizer: ragged feature rows");
    }
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - s.mean[j];
      s.stddev[j] += dev * dev;
    }
  }
  for (auto& sd : s.stddev) {
    sd = std::sqrt(sd / n);
    if (sd == 0.0) sd = 1.0;  // zero-variance columns pass through
  }
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
  if (row.size() != mean.size()) {
    throw std::invalid_argument("Standardizer: dimension mismatch");
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = (row[j] - mean[j]) / stddev[j];
  }
  return out;
}

namespace {

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_feature_tsv(std::ostream& out, const FeatureManifest& manifest,
                       const std::vector<FeatureVector>& rows,
                       const std::vector<double>* labels) {
  if (labels && labels->size() != rows.size()) {
    throw std::invalid_argument("write_feature_tsv: label count mismatch");
  }
  out << "utterance_id";
  for (const auto& id : manifest.features) out << '\t' << id;
  if (labels) out << "\tmeteor";
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.values.size() != manifest.features.size()) {
      throw std::invalid_argument("write_feature_tsv: row/manifest mismatch");
    }
    out << r.utterance_id;
    for (double x : r.values) out << '\t' << format_double(x);
    if (labels) out << '\t' << format_double((*labels)[i]);
    out << '\n';
  }
}

}  // namespace qe::features
