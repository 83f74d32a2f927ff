#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qe/eval.hpp"
#include "qe/features.hpp"
#include "qe/rng.hpp"

using namespace qe;

namespace {

corpus::UtteranceRecord make_record(const std::string& id,
                                    const std::string& pair,
                                    const std::string& src,
                                    const std::string& interp,
                                    const std::string& ref) {
  corpus::UtteranceRecord r;
  r.id = id;
  r.lang_pair = corpus::LangPair::parse(pair);
  r.source = src;
  r.interp = interp;
  r.reference = ref;
  return r;
}

struct Fixture {
  corpus::Corpus c;
  std::vector<features::TokenizedRecord> toks;
  features::QeResources res;
  features::SeedList seed;
  corpus::FillerLexicon fillers;

  explicit Fixture(const std::string& pair = "en-fr") {
    c = eval::generate_synthetic(120, corpus::LangPair::parse(pair),
                                 eval::DegradationProfile::mixed(), 42);
    fillers = corpus::default_filler_lexicon(c.lang_pair.tgt);
    seed = features::default_seed_list(c.lang_pair.tgt);
    for (const auto& r : c.records) {
      toks.push_back(features::tokenize_record(r, fillers));
    }
    std::vector<int> all(c.records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    res = features::build_resources(toks, all, 3);
  }

  features::FeatureVector extract(const corpus::UtteranceRecord& r,
                                  const features::FeatureManifest& m) const {
    const auto t = features::tokenize_record(r, fillers);
    return features::Extractor(res, seed, c.lang_pair).extract(r, t, m);
  }
};

}  // namespace

TEST_CASE("manifests have the pinned shapes") {
  const auto b = features::FeatureManifest::baseline();
  const auto t = features::FeatureManifest::trimmed();
  const auto p = features::FeatureManifest::proposed();
  CHECK(b.size() == 17);
  CHECK(t.size() == 12);
  CHECK(p.size() == 18);
  // trimmed is a subset of baseline, in order; proposed extends trimmed.
  for (const auto& id : t.features) {
    CHECK(std::find(b.features.begin(), b.features.end(), id) !=
          b.features.end());
  }
  CHECK(std::equal(t.features.begin(), t.features.end(), p.features.begin()));
  CHECK(std::find(t.features.begin(), t.features.end(), "src_punct_count") ==
        t.features.end());
  CHECK(std::find(t.features.begin(), t.features.end(), "src_bigram_q1_pct") ==
        t.features.end());
}

TEST_CASE("baseline features on a simple record") {
  Fixture fx;
  auto r = make_record("t1", "en-fr", "the cat sat", "le chat", "le chat");
  const auto fv = fx.extract(r, features::FeatureManifest::baseline());
  REQUIRE(fv.values.size() == 17);
  CHECK(fv.values[0] == 3.0);  // src_token_count
  CHECK(fv.values[1] == 2.0);  // tgt_token_count
  CHECK(fv.values[2] == doctest::Approx(3.0));  // avg token length
  for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("empty interpreter output hits the documented floors") {
  Fixture fx;
  auto r = make_record("t2", "en-fr", "the cat sat on the mat", "",
                       "le chat était sur le tapis");
  const auto fv = fx.extract(r, features::FeatureManifest::baseline());
  const auto& ids = features::FeatureManifest::baseline().features;
  auto at = [&](const std::string& id) {
    return fv.values[std::find(ids.begin(), ids.end(), id) - ids.begin()];
  };
  CHECK(at("tgt_token_count") == 0.0);
  CHECK(at("tgt_lm_logprob") ==
        doctest::Approx(fx.res.tgt_lm.min_sentence_logprob - 1.0));
  CHECK(at("tgt_punct_count") == 0.0);
  for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("fully seen source has seen-unigram percentage 1") {
  Fixture fx;
  // Words straight out of the synthetic generator's vocabulary.
  auto r = make_record("t3", "en-fr", "parliament budget", "parlement budget",
                       "parlement budget");
  const auto fv = fx.extract(r, features::FeatureManifest::baseline());
  const auto& ids = features::FeatureManifest::baseline().features;
  const auto idx =
      std::find(ids.begin(), ids.end(), "src_seen_unigram_pct") - ids.begin();
  CHECK(fv.values[idx] == doctest::Approx(1.0));
}

TEST_CASE("trimmed is a projection of baseline") {
  Fixture fx;
  const auto b_ids = features::FeatureManifest::baseline().features;
  const auto t_ids = features::FeatureManifest::trimmed().features;
  for (int i = 0; i < 20; ++i) {
    const auto& r = fx.c.records[i];
    const auto fb = fx.extract(r, features::FeatureManifest::baseline());
    const auto ft = fx.extract(r, features::FeatureManifest::trimmed());
    REQUIRE(ft.values.size() == 12);
    for (std::size_t j = 0; j < t_ids.size(); ++j) {
      const auto bi =
          std::find(b_ids.begin(), b_ids.end(), t_ids[j]) - b_ids.begin();
      CHECK(ft.values[j] == fb.values[bi]);  // bit-equal projection
    }
  }
}

TEST_CASE("proposed manifest extends trimmed to 18 values deterministically") {
  Fixture fx;
  const auto& r = fx.c.records[5];
  const auto p1 = fx.extract(r, features::FeatureManifest::proposed());
  const auto p2 = fx.extract(r, features::FeatureManifest::proposed());
  REQUIRE(p1.values.size() == 18);
  CHECK(p1.values == p2.values);

  auto empty = make_record("e", "en-fr", "the cat sat", "", "le chat");
  const auto pe = fx.extract(empty, features::FeatureManifest::proposed());
  for (double v : pe.values) CHECK(std::isfinite(v));
}

TEST_CASE("disfluency ratios from the annotated transcript") {
  const auto lex = corpus::default_filler_lexicon("it");
  const auto a = corpus::parse_annotations(
      "Ehm il Parlamento... dopo le elezioni... darem- darà spazio", "it", lex);
  const auto d = features::feat_disfluency(a.tokens, a.spans);
  const double n = static_cast<double>(a.tokens.size());
  CHECK(n == 11.0);
  CHECK(d.pause_ratio == doctest::Approx(2.0 / n));
  CHECK(d.filler_ratio == doctest::Approx(1.0 / n));
  CHECK(d.incomplete_ratio == doctest::Approx(1.0 / n));

  const auto fluent = corpus::parse_annotations("darà spazio", "it", lex);
  const auto df = features::feat_disfluency(fluent.tokens, fluent.spans);
  CHECK(df.pause_ratio == 0.0);
  CHECK(df.filler_ratio == 0.0);
  CHECK(df.incomplete_ratio == 0.0);

  const auto de = features::feat_disfluency({}, {});
  CHECK(de.pause_ratio == 0.0);
}

TEST_CASE("non-specific word ratio") {
  const auto seed = features::default_seed_list("en");
  CHECK(features::feat_nonspecific({"he", "explained", "it", "to", "them"},
                                   seed) == doctest::Approx(0.6));
  CHECK(features::feat_nonspecific({"no", "seed", "words"}, seed) == 0.0);
  CHECK(features::feat_nonspecific({"he", "it", "them"}, seed) ==
        doctest::Approx(1.0));
  CHECK(features::feat_nonspecific({}, seed) == 0.0);
}

TEST_CASE("cognate detection per language pair") {
  const auto fr = corpus::LangPair::parse("en-fr");
  const auto ja = corpus::LangPair::parse("en-ja");
  CHECK(features::feat_cognates({"artificial"}, {"artificiel"}, fr) ==
        doctest::Approx(1.0));
  CHECK(features::feat_cognates({"dog"}, {"chien"}, fr) == 0.0);
  CHECK(features::feat_cognates({"computer", "is"},
                                {"コンピュータ", "です"}, ja) ==
        doctest::Approx(0.5));
  CHECK(features::feat_cognates({"a"}, {}, fr) == 0.0);
  CHECK_THROWS(features::feat_cognates({"a"}, {"b"},
                                       corpus::LangPair::parse("de-fr")));
}

TEST_CASE("cognate ratio ignores token order") {
  const auto fr = corpus::LangPair::parse("en-fr");
  std::vector<std::string> src = {"artificial", "budget", "dog"};
  std::vector<std::string> tgt = {"artificiel", "chien", "budget"};
  const double base = features::feat_cognates(src, tgt, fr);
  std::reverse(src.begin(), src.end());
  CHECK(features::feat_cognates(src, tgt, fr) == doctest::Approx(base));
  std::reverse(tgt.begin(), tgt.end());
  CHECK(features::feat_cognates(src, tgt, fr) == doctest::Approx(base));
}

TEST_CASE("length and punctuation ratios") {
  std::vector<std::string> ten(10, "w"), five(5, "v");
  const auto lp = features::feat_length_punct(ten, five);
  CHECK(lp.len_ratio == doctest::Approx(2.0));

  std::vector<std::string> same = {"a", "b", "."};
  const auto ident = features::feat_length_punct(same, same);
  CHECK(ident.len_ratio == doctest::Approx(1.0));
  CHECK(ident.punct_ratio == doctest::Approx(1.0));
  CHECK(ident.len_diff_ratio == doctest::Approx(0.0));

  std::vector<std::string> eight(8, "w");
  eight.push_back(".");
  eight.push_back(".");
  const auto guard = features::feat_length_punct(eight, {});
  CHECK(guard.len_ratio == doctest::Approx(8.0));
  CHECK(guard.punct_ratio == doctest::Approx(2.0));  // src punct count
  CHECK(guard.len_diff_ratio == doctest::Approx(1.0));
}

TEST_CASE("standardizer fits means and population deviations") {
  const auto s = features::Standardizer::fit({{1.0}, {3.0}});
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.stddev[0] == doctest::Approx(1.0));
  CHECK(s.apply({1.0})[0] == doctest::Approx(-1.0));
  CHECK(s.apply({3.0})[0] == doctest::Approx(1.0));

  const auto z = features::Standardizer::fit({{5.0}, {5.0}, {5.0}});
  CHECK(z.apply({5.0})[0] == 0.0);

  CHECK_THROWS(features::Standardizer::fit({{1.0}}));

  // Applying a fit standardizer to its own training set centers it.
  Rng rng(12);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({rng.unit() * 5.0, rng.unit() - 3.0, 7.0});
  }
  const auto fit = features::Standardizer::fit(rows);
  double m0 = 0, m1 = 0;
  for (const auto& r : rows) {
    const auto t = fit.apply(r);
    m0 += t[0];
    m1 += t[1];
    CHECK(t[2] == 0.0);
  }
  CHECK(std::abs(m0 / 40.0) < 1e-9);
  CHECK(std::abs(m1 / 40.0) < 1e-9);
}

TEST_CASE("random degenerate records never produce non-finite features") {
  Fixture fx;
  Rng rng(77);
  const std::vector<std::string> scraps = {
      "parlement", "budget",  "...", ",", ".", "euh", "darem-", "l'eau",
      "東京",      "ヒント", "x",   "très", "23"};
  for (int it = 0; it < 300; ++it) {
    std::string interp;
    const std::size_t len = rng.below(10);
    for (std::size_t k = 0; k < len; ++k) {
      interp += scraps[rng.below(scraps.size())];
      interp += ' ';
    }
    auto r = make_record("f" + std::to_string(it), "en-fr",
                         "the budget vote", interp, "le vote du budget");
    const auto fv = fx.extract(r, features::FeatureManifest::proposed());
    for (double v : fv.values) REQUIRE(std::isfinite(v));
    // Annotation kinds are exclusive, so the disfluency ratios sum to at
    // most one.
    const auto t = features::tokenize_record(r, fx.fillers);
    const auto d = features::feat_disfluency(t.interp_tokens, t.spans);
    REQUIRE(d.pause_ratio + d.filler_ratio + d.incomplete_ratio <= 1.0 + 1e-9);
  }
}

TEST_CASE("resources serialize and reload byte-stably") {
  Fixture fx;
  const auto j = features::resources_to_json(fx.res);
  const auto r2 = features::resources_from_json(j);
  CHECK(features::resources_to_json(r2).dump() == j.dump());
}

TEST_CASE("extract errors when resources are missing") {
  Fixture fx;
  features::QeResources empty;
  features::Extractor ex(empty, fx.seed, fx.c.lang_pair);
  const auto r = fx.c.records[0];
  const auto t = features::tokenize_record(r, fx.fillers);
  CHECK_THROWS_WITH_AS(
      ex.extract(r, t, features::FeatureManifest::baseline()),
      "extract: missing resource: source language model", std::runtime_error);
}

TEST_CASE("feature TSV has the documented layout") {
  Fixture fx;
  const auto manifest = features::FeatureManifest::trimmed();
  std::vector<features::FeatureVector> rows;
  std::vector<double> labels;
  for (int i = 0; i < 3; ++i) {
    rows.push_back(fx.extract(fx.c.records[i], manifest));
    labels.push_back(0.25 * i);
  }
  std::ostringstream out;
  features::write_feature_tsv(out, manifest, rows, &labels);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("utterance_id\t", 0) == 0);
  CHECK(header.find("\tmeteor") == header.size() - 7);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    ++count;
    CHECK(std::count(line.begin(), line.end(), '\t') ==
          static_cast<long>(manifest.size()) + 1);
  }
  CHECK(count == 3);
}
