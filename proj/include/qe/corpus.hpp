#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qe::corpus {

struct LangPair {
  std::string src;  // lowercase ISO 639-1
  std::string tgt;

  static LangPair parse(std::string_view text);  // "en-fr", "xx-yy", ...
  std::string str() const { return src + "-" + tgt; }
  bool operator==(const LangPair&) const = default;
};

enum class Rank { B, A, S };  // interpreter proficiency, EN-JA corpora only

std::string rank_str(Rank r);
Rank parse_rank(std::string_view s);

struct UtteranceRecord {
  std::string id;
  LangPair lang_pair;
  std::string source;
  std::string interp;  // may be empty: interpreter silence is valid data
  std::string reference;
  std::optional<Rank> rank;
  std::optional<std::string> ref_provenance;

  bool operator==(const UtteranceRecord&) const = default;
};

enum class AnnotationKind { pause, filler, incomplete };

struct AnnotationSpan {
  AnnotationKind kind;
  std::size_t token_index;

  bool operator==(const AnnotationSpan&) const = default;
};

struct Corpus {
  std::vector<UtteranceRecord> records;
  LangPair lang_pair;

  bool operator==(const Corpus&) const = default;
};

// JSONL, one record per line. Errors name the offending line and field.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& c, const std::string& path);

// One lowercase token per line, '#' starts a comment.
using FillerLexicon = std::unordered_set<std::string>;
FillerLexicon load_filler_lexicon(const std::string& path);
FillerLexicon default_filler_lexicon(std::string_view lang);

struct AnnotatedTokens {
  std::vector<std::string> tokens;  // all tokens kept; spans are flags
  std::vector<AnnotationSpan> spans;
};

// Classifies disfluency markers in an interpreter transcript: the literal
// token "..." is a pause, a token ending in "-" is an incomplete word, and a
// case-insensitive lexicon member is a filler. Each token gets at most one
// span.
AnnotatedTokens parse_annotations(std::string_view interp_text,
                                  std::string_view lang,
                                  const FillerLexicon& fillers);

}  // namespace qe::corpus
