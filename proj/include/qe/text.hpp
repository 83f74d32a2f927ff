#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qe::text {

// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD
// rather than throwing, so arbitrary corpus bytes are always processable.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(const std::u32string& s);

// Simple case folding: ASCII plus the Latin-1 and Latin Extended-A ranges,
// which covers the French/Italian accented capitals seen in transcripts.
char32_t fold_char(char32_t c);
std::string fold_case(std::string_view s);

bool is_punct_char(char32_t c);
bool lang_supported(std::string_view lang);  // en, fr, it, ja

struct TokenizedUtterance {
  std::vector<std::string> tokens;
  std::string lang;
};

// en/fr/it: whitespace split with punctuation separated into its own tokens
// (runs of one punctuation character collapse into a single token, so "..."
// survives as one token). Apostrophes between letters stay attached
// ("l'ordine"), as do hyphens following a word character ("darem-").
// ja: the corpora arrive pre-segmented, so this is a plain whitespace split.
TokenizedUtterance tokenize(std::string_view raw, std::string_view lang);

// True iff every character of the token is punctuation.
bool is_punctuation(std::string_view token);

// Fraction of the token's characters inside the katakana block U+30A0-U+30FF.
double katakana_fraction(std::string_view token);

// 1 - levenshtein(a, b) / max(|a|, |b|), case-folded, over Unicode scalars.
double orthographic_similarity(std::string_view a, std::string_view b);

std::size_t levenshtein(const std::u32string& a, const std::u32string& b);

}  // namespace qe::text
