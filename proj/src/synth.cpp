#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "qe/eval.hpp"
#include "qe/rng.hpp"
#include "qe/text.hpp"

namespace qe::eval {

namespace {

struct WordPair {
  const char* en;
  const char* tgt;
};

struct SynthLexicon {
  std::vector<WordPair> content;
  std::vector<WordPair> function;
  std::vector<std::string> pronouns;  // target side, inside the seed list
  std::vector<std::string> fillers;   // target side, inside the lexicon
  std::string comma;
  std::string final_punct;
  bool katakana_cognates = false;
};

const SynthLexicon& lexicon_for(const corpus::LangPair& pair) {
  static const SynthLexicon fr{
      {{"parliament", "parlement"}, {"president", "président"},
       {"election", "élection"},   {"debate", "débat"},
       {"question", "question"},   {"commission", "commission"},
       {"minister", "ministre"},   {"proposal", "proposition"},
       {"budget", "budget"},       {"crisis", "crise"},
       {"decision", "décision"},   {"policy", "politique"},
       {"agenda", "agenda"},       {"important", "important"},
       {"national", "nationale"},  {"european", "européenne"},
       {"economy", "économie"},    {"speech", "discours"},
       {"meeting", "réunion"},     {"law", "loi"},
       {"country", "pays"},        {"people", "gens"},
       {"week", "semaine"},        {"report", "rapport"},
       {"government", "gouvernement"}, {"rights", "droits"},
       {"work", "travail"},        {"member", "membre"},
       {"support", "soutien"},     {"future", "avenir"},
       {"peace", "paix"},          {"war", "guerre"},
       {"growth", "croissance"},   {"market", "marché"},
       {"trade", "commerce"},      {"health", "santé"},
       {"school", "école"},        {"this", "cela"},
       {"them", "eux"},            {"vote", "scrutin"}},
      {{"the", "le"}, {"of", "de"}, {"and", "et"}, {"in", "dans"},
       {"for", "pour"}, {"with", "avec"}, {"on", "sur"}, {"we", "nous"}},
      {"il", "elle", "ils", "cela", "eux", "celui", "chose"},
      {"euh", "ben", "hein"},
      ",",
      ".",
      false};
  static const SynthLexicon it{
      {{"parliament", "parlamento"}, {"president", "presidente"},
       {"election", "elezione"},    {"debate", "dibattito"},
       {"question", "questione"},   {"commission", "commissione"},
       {"minister", "ministro"},    {"proposal", "proposta"},
       {"budget", "bilancio"},      {"crisis", "crisi"},
       {"decision", "decisione"},   {"policy", "politica"},
       {"agenda", "agenda"},        {"important", "importante"},
       {"national", "nazionale"},   {"european", "europea"},
       {"economy", "economia"},     {"speech", "discorso"},
       {"meeting", "riunione"},     {"law", "legge"},
       {"country", "paese"},        {"people", "gente"},
       {"week", "settimana"},       {"report", "relazione"},
       {"government", "governo"},   {"rights", "diritti"},
       {"work", "lavoro"},          {"member", "membro"},
       {"support", "sostegno"},     {"future", "futuro"},
       {"peace", "pace"},           {"war", "guerra"},
       {"growth", "crescita"},      {"market", "mercato"},
       {"trade", "commercio"},      {"health", "salute"},
       {"school", "scuola"},        {"this", "questo"},
       {"them", "loro"},            {"vote", "voto"}},
      {{"the", "il"}, {"of", "di"}, {"and", "e"}, {"in", "in"},
       {"for", "per"}, {"with", "con"}, {"on", "su"}, {"we", "noi"}},
      {"lui", "lei", "loro", "questo", "quello", "cosa", "ciò"},
      {"ehm", "eh", "mah"},
      ",",
      ".",
      false};
  static const SynthLexicon ja{
      {{"parliament", "議会"},  {"president", "大統領"},
       {"election", "選挙"},    {"debate", "討論"},
       {"question", "質問"},    {"commission", "委員会"},
       {"minister", "大臣"},    {"proposal", "提案"},
       {"budget", "予算"},      {"crisis", "危機"},
       {"decision", "決定"},    {"policy", "政策"},
       {"agenda", "議題"},      {"important", "重要"},
       {"national", "国民"},    {"european", "欧州"},
       {"economy", "経済"},     {"speech", "演説"},
       {"meeting", "会議"},     {"law", "法律"},
       {"country", "国"},       {"people", "人々"},
       {"week", "週間"},        {"report", "報告"},
       {"government", "政府"},  {"rights", "権利"},
       {"work", "仕事"},        {"member", "議員"},
       {"support", "支援"},     {"future", "未来"},
       {"peace", "平和"},       {"war", "戦争"},
       {"growth", "成長"},      {"market", "市場"},
       {"trade", "貿易"},       {"health", "健康"},
       {"energy", "エネルギー"}, {"europe", "ヨーロッパ"},
       {"computer", "コンピュータ"}, {"this", "これ"},
       {"them", "彼ら"},        {"vote", "投票"}},
      {{"the", "は"}, {"of", "の"}, {"and", "と"}, {"in", "に"},
       {"for", "ため"}, {"with", "で"}, {"on", "が"}, {"we", "私たち"}},
      {"これ", "それ", "あれ", "彼", "彼女", "彼ら", "もの"},
      {"えー", "あの", "えっと"},
      "、",
      "。",
      true};
  const std::string p = pair.str();
  if (p == "en-fr") return fr;
  if (p == "en-it") return it;
  if (p == "en-ja") return ja;
  throw std::invalid_argument("generate_synthetic: unsupported language pair " +
                              p);
}

// Crude letter-to-katakana rendering; the output is irrelevant linguistically
// but is 100% katakana, which is what the cognate feature keys on.
std::string katakanize(const std::string& en) {
  static const char* kKana[26] = {
      "ア", "ブ", "ク", "ド", "エ", "フ", "グ", "ハ", "イ",
      "ジ", "カ", "ル", "ム", "ン", "オ", "プ", "キ", "ラ",
      "ス", "ト", "ウ", "バ", "ワ", "クス", "ヤ", "ズ"};
  std::string out;
  for (char c : en) {
    if (c >= 'a' && c <= 'z') out += kKana[c - 'a'];
    else if (c >= 'A' && c <= 'Z') out += kKana[c - 'A'];
  }
  return out.empty() ? std::string("ア") : out;
}

// A light "calque": the interpreter approximates an unknown target word by
// bending the source word, which keeps >= 50% orthographic overlap.
std::string calque(const std::string& en, bool italian) {
  std::string out = en;
  if (!out.empty() && out.back() == 'e') out.pop_back();
  out += italian ? "o" : "e";
  return out;
}

std::string take_prefix_with_hyphen(const std::string& word) {
  const std::u32string cps = text::decode_utf8(word);
  const std::size_t keep = std::max<std::size_t>(1, (cps.size() + 1) / 2);
  return text::encode_utf8(cps.substr(0, keep)) + "-";
}

enum class TokKind { content, function, punct };

struct RefToken {
  std::string en;   // aligned source word (empty for target-only padding)
  std::string tgt;
  TokKind kind;
};

}  // namespace

DegradationProfile DegradationProfile::mixed() {
  DegradationProfile p;
  p.name = "mixed";
  p.dropout = 0.18;
  p.filler_insert = 0.22;
  p.pause_insert = 0.18;
  p.pronoun_replace = 0.30;
  p.cognate_replace = 0.30;
  p.incomplete_replace = 0.08;
  p.ref_noise = 1.15;
  return p;
}

DegradationProfile DegradationProfile::fillers_only() {
  DegradationProfile p;
  p.name = "fillers";
  p.filler_replace = 0.50;
  p.pause_insert = 0.25;
  return p;
}

DegradationProfile DegradationProfile::length_only() {
  DegradationProfile p;
  p.name = "length";
  p.dropout = 0.60;
  return p;
}

DegradationProfile DegradationProfile::parse(std::string_view name) {
  if (name == "mixed") return mixed();
  if (name == "fillers" || name == "fillers_only") return fillers_only();
  if (name == "length" || name == "length_only") return length_only();
  throw std::invalid_argument("unknown degradation profile '" +
                              std::string(name) +
                              "' (expected mixed, fillers or length)");
}

corpus::Corpus generate_synthetic(int n, const corpus::LangPair& pair,
                                  const DegradationProfile& profile,
                                  std::uint64_t seed,
                                  std::vector<double>* deltas) {
  if (n < 100) {
    throw std::invalid_argument("generate_synthetic: need n >= 100");
  }
  const SynthLexicon& lex = lexicon_for(pair);
  Rng rng(sub_seed(seed, "synth"));
  if (deltas) deltas->clear();

  corpus::Corpus out;
  out.lang_pair = pair;
  for (int rec = 0; rec < n; ++rec) {
    // Reference sentence from the phrase table, Zipf-ish word choice. Both
    // short quips and long passages occur, like real proceedings.
    std::vector<RefToken> ref;
    const int slots = 5 + static_cast<int>(rng.below(9));
    for (int s = 0; s < slots; ++s) {
      if (rng.unit() < 0.35) {
        const auto& f = lex.function[rng.below(lex.function.size())];
        ref.push_back({f.en, f.tgt, TokKind::function});
      }
      const double u = rng.unit();
      const std::size_t idx = std::min<std::size_t>(
          lex.content.size() - 1,
          static_cast<std::size_t>(u * u * static_cast<double>(lex.content.size())));
      const auto& w = lex.content[idx];
      ref.push_back({w.en, w.tgt, TokKind::content});
      if (s + 1 < slots && rng.unit() < 0.12) {
        ref.push_back({",", lex.comma, TokKind::punct});
      }
    }
    // Target-only padding: translations do not track source length exactly.
    const int pad = static_cast<int>(rng.below(5));
    for (int p = 0; p < pad; ++p) {
      const auto& f = lex.function[rng.below(lex.function.size())];
      const std::size_t at = rng.below(ref.size() + 1);
      ref.insert(ref.begin() + at, {"", f.tgt, TokKind::function});
    }
    ref.push_back({".", lex.final_punct, TokKind::punct});

    const double delta =
        profile.fixed_delta ? *profile.fixed_delta : rng.unit();

    // Interpreter output: corrupt the reference token by token.
    std::vector<std::string> interp;
    for (const auto& tok : ref) {
      if (tok.tgt.empty()) continue;  // source-only words never reach the target
      const double u = rng.unit();
      double cum = profile.dropout * delta;
      bool emitted = false;
      if (u < cum) {
        emitted = true;  // dropped
      } else if (tok.kind != TokKind::punct) {
        const bool content = tok.kind == TokKind::content;
        cum += content ? profile.pronoun_replace * delta : 0.0;
        if (!emitted && u < cum) {
          interp.push_back(lex.pronouns[rng.below(lex.pronouns.size())]);
          emitted = true;
        }
        cum += (content && !tok.en.empty()) ? profile.cognate_replace * delta
                                            : 0.0;
        if (!emitted && u < cum) {
          interp.push_back(lex.katakana_cognates
                               ? katakanize(tok.en)
                               : calque(tok.en, pair.tgt == "it"));
          emitted = true;
        }
        cum += content ? profile.incomplete_replace * delta : 0.0;
        if (!emitted && u < cum) {
          interp.push_back(take_prefix_with_hyphen(tok.tgt));
          emitted = true;
        }
        cum += profile.filler_replace * delta;
        if (!emitted && u < cum) {
          interp.push_back(lex.fillers[rng.below(lex.fillers.size())]);
          emitted = true;
        }
      }
      if (!emitted) interp.push_back(tok.tgt);
      if (tok.kind != TokKind::punct) {
        if (rng.unit() < profile.filler_insert * delta) {
          interp.push_back(lex.fillers[rng.below(lex.fillers.size())]);
        }
        if (rng.unit() < profile.pause_insert * delta) {
          interp.push_back("...");
        }
      }
    }

    // Free-translation noise: swap some reference words for renderings the
    // interpreter never saw. The interpreter output keeps following the
    // original wording, so this moves the METEOR label without moving any
    // feature.
    if (profile.ref_noise > 0.0) {
      const double rate = profile.ref_noise * std::pow(delta, 0.3);
      for (auto& tok : ref) {
        if (tok.kind == TokKind::punct || tok.tgt.empty()) continue;
        if (rng.unit() < rate) {
          tok.tgt = tok.kind == TokKind::content
                        ? lex.content[rng.below(lex.content.size())].tgt
                        : lex.function[rng.below(lex.function.size())].tgt;
        }
      }
    }

    corpus::UtteranceRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", rec);
    r.id = id;
    r.lang_pair = pair;
    {
      std::string src, tgt_ref, tgt_interp;
      for (const auto& tok : ref) {
        if (tok.en.empty()) continue;
        if (!src.empty()) src += ' ';
        src += tok.en;
      }
      for (const auto& tok : ref) {
        if (tok.tgt.empty()) continue;
        if (!tgt_ref.empty()) tgt_ref += ' ';
        tgt_ref += tok.tgt;
      }
      for (const auto& tok : interp) {
        if (!tgt_interp.empty()) tgt_interp += ' ';
        tgt_interp += tok;
      }
      r.source = src;
      r.reference = tgt_ref;
      r.interp = tgt_interp;
    }
    if (pair.str() == "en-ja") r.rank = corpus::Rank::B;
    r.ref_provenance = "synthetic";
    out.records.push_back(std::move(r));
    if (deltas) deltas->push_back(delta);
  }
  return out;
}

}  // namespace qe::eval
