#include "qe/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "qe/text.hpp"

namespace qe::corpus {

using nlohmann::json;

LangPair LangPair::parse(std::string_view s) {
  auto bad = [&] {
    throw std::runtime_error("invalid lang_pair '" + std::string(s) +
                             "' (expected e.g. \"en-fr\")");
  };
  if (s.size() != 5 || s[2] != '-') bad();
  for (std::size_t i : {0u, 1u, 3u, 4u}) {
    if (s[i] < 'a' || s[i] > 'z') bad();
  }
  return LangPair{std::string(s.substr(0, 2)), std::string(s.substr(3, 2))};
}

std::string rank_str(Rank r) {
  switch (r) {
    case Rank::B: return "B";
    case Rank::A: return "A";
    case Rank::S: return "S";
  }
  return "?";
}

Rank parse_rank(std::string_view s) {
  if (s == "B") return Rank::B;
  if (s == "A") return Rank::A;
  if (s == "S") return Rank::S;
  throw std::runtime_error("invalid rank '" + std::string(s) +
                           "' (expected B, A or S)");
}

namespace {

std::string require_string(const json& j, const char* field, std::size_t line,
                           bool allow_empty) {
  if (!j.contains(field)) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": missing field '" + field + "'");
  }
  if (!j[field].is_string()) {
    throw std::runtime_error("line " + std::to_string(line) + ": field '" +
                             field + "' must be a string");
  }
  std::string v = j[field].get<std::string>();
  if (!allow_empty && v.empty()) {
    throw std::runtime_error("line " + std::to_string(line) + ": field '" +
                             field + "' must be nonempty");
  }
  return v;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  Corpus c;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": malformed JSON record");
    }
    UtteranceRecord r;
    r.id = require_string(j, "id", lineno, false);
    r.lang_pair = LangPair::parse(require_string(j, "lang_pair", lineno, false));
    r.source = require_string(j, "source", lineno, false);
    r.interp = require_string(j, "interp", lineno, true);
    r.reference = require_string(j, "reference", lineno, false);
    if (j.contains("rank") && !j["rank"].is_null()) {
      if (r.lang_pair.str() != "en-ja") {
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": field 'rank' is only valid for en-ja");
      }
      r.rank = parse_rank(require_string(j, "rank", lineno, false));
    }
    if (j.contains("ref_provenance") && !j["ref_provenance"].is_null()) {
      r.ref_provenance = require_string(j, "ref_provenance", lineno, true);
    }
    if (!seen_ids.insert(r.id).second) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": duplicate id '" + r.id + "'");
    }
    if (c.records.empty()) {
      c.lang_pair = r.lang_pair;
    } else if (!(r.lang_pair == c.lang_pair)) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": mixed language pairs (" + r.lang_pair.str() +
                               " vs " + c.lang_pair.str() + ")");
    }
    c.records.push_back(std::move(r));
  }
  if (c.records.empty()) {
    throw std::runtime_error("corpus is empty: " + path);
  }
  return c;
}

void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& r : c.records) {
    json j;
    j["id"] = r.id;
    j["lang_pair"] = r.lang_pair.str();
    j["source"] = r.source;
    j["interp"] = r.interp;
    j["reference"] = r.reference;
    if (r.rank) j["rank"] = rank_str(*r.rank);
    if (r.ref_provenance) j["ref_provenance"] = *r.ref_provenance;
    out << j.dump() << "\n";
  }
}

FillerLexicon load_filler_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open filler lexicon: " + path);
  FillerLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) lex.insert(text::fold_case(tok));
  }
  if (lex.empty()) {
    throw std::runtime_error("filler lexicon is empty: " + path);
  }
  return lex;
}

FillerLexicon default_filler_lexicon(std::string_view lang) {
  if (lang == "en") return {"uh", "um", "er", "ah"};
  if (lang == "fr") return {"euh", "ben", "hein"};
  if (lang == "it") return {"ehm", "eh", "mah"};
  if (lang == "ja") return {"えー", "あの", "えっと"};
  throw std::invalid_argument("no default filler lexicon for language '" +
                              std::string(lang) + "'");
}

AnnotatedTokens parse_annotations(std::string_view interp_text,
                                  std::string_view lang,
                                  const FillerLexicon& fillers) {
  AnnotatedTokens out;
  out.tokens = text::tokenize(interp_text, lang).tokens;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    const std::string& tok = out.tokens[i];
    if (tok == "...") {
      out.spans.push_back({AnnotationKind::pause, i});
    } else if (tok.size() > 1 && tok.back() == '-' &&
               !text::is_punctuation(tok)) {
      out.spans.push_back({AnnotationKind::incomplete, i});
    } else if (fillers.count(text::fold_case(tok)) > 0) {
      out.spans.push_back({AnnotationKind::filler, i});
    }
  }
  return out;
}

}  // namespace qe::corpus
