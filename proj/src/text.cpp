#include "qe/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace qe::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool is_ws(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x3000;  // ideographic space
}

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(const std::u32string& s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

char32_t fold_char(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  // Latin-1 supplement capitals, excluding the multiplication sign.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  // Latin Extended-A pairs upper/lower casings at even/odd code points.
  if (c >= 0x100 && c <= 0x177 && (c % 2 == 0)) return c + 1;
  if (c == 0x178) return 0xFF;  // Y with diaeresis
  if (c >= 0x179 && c <= 0x17E && (c % 2 == 1)) return c + 1;
  return c;
}

std::string fold_case(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  for (auto& c : cps) c = fold_char(c);
  return encode_utf8(cps);
}

bool is_punct_char(char32_t c) {
  if (c < 0x80) {
    return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') ||
           (c >= U'[' && c <= U'`') || (c >= U'{' && c <= U'~');
  }
  switch (c) {
    case 0xA1:  // inverted exclamation
    case 0xA7:  // section sign
    case 0xAB:  // left guillemet
    case 0xB6:  // pilcrow
    case 0xB7:  // middle dot
    case 0xBB:  // right guillemet
    case 0xBF:  // inverted question mark
      return true;
    default:
      break;
  }
  // General punctuation (dashes, quotes, ellipsis U+2026).
  if (in(c, 0x2010, 0x2027) || in(c, 0x2030, 0x205E)) return true;
  // CJK symbols and punctuation, plus the katakana middle dot.
  if (in(c, 0x3001, 0x3003) || in(c, 0x3008, 0x3011) || in(c, 0x3014, 0x301F) ||
      c == 0x3030 || c == 0x303D || c == 0x30FB) {
    return true;
  }
  // Fullwidth and halfwidth forms.
  if (in(c, 0xFF01, 0xFF0F) || in(c, 0xFF1A, 0xFF20) || in(c, 0xFF3B, 0xFF40) ||
      in(c, 0xFF5B, 0xFF65)) {
    return true;
  }
  return false;
}

bool lang_supported(std::string_view lang) {
  return lang == "en" || lang == "fr" || lang == "it" || lang == "ja";
}

namespace {

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

std::vector<std::u32string> split_chunk(const std::u32string& chunk) {
  std::vector<std::u32string> out;
  std::u32string word;
  std::size_t i = 0;
  const std::size_t n = chunk.size();
  while (i < n) {
    const char32_t c = chunk[i];
    if (!is_punct_char(c)) {
      word.push_back(c);
      ++i;
      continue;
    }
    if (is_apostrophe(c) && !word.empty() && i + 1 < n &&
        !is_punct_char(chunk[i + 1])) {
      word.push_back(c);  // clitic: l'ordine, all'ordine
      ++i;
      continue;
    }
    if (c == U'-' && !word.empty()) {
      word.push_back(c);  // trailing/inner hyphen: darem-, well-known
      ++i;
      continue;
    }
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
    // Collapse a run of one repeated punctuation character ("...", "!!").
    std::u32string run(1, c);
    while (i + 1 < n && chunk[i + 1] == c) {
      run.push_back(c);
      ++i;
    }
    out.push_back(run);
    ++i;
  }
  if (!word.empty()) out.push_back(word);
  return out;
}

}  // namespace

TokenizedUtterance tokenize(std::string_view raw, std::string_view lang) {
  if (!lang_supported(lang)) {
    throw std::invalid_argument("tokenize: unsupported language code '" +
                                std::string(lang) + "'");
  }
  TokenizedUtterance out;
  out.lang = std::string(lang);
  const std::u32string cps = decode_utf8(raw);
  std::u32string chunk;
  auto flush = [&] {
    if (chunk.empty()) return;
    if (lang == "ja") {
      out.tokens.push_back(encode_utf8(chunk));
    } else {
      for (auto& t : split_chunk(chunk)) out.tokens.push_back(encode_utf8(t));
    }
    chunk.clear();
  };
  for (char32_t c : cps) {
    if (is_ws(c)) {
      flush();
    } else {
      chunk.push_back(c);
    }
  }
  flush();
  return out;
}

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (char32_t c : decode_utf8(token)) {
    if (!is_punct_char(c)) return false;
  }
  return true;
}

double katakana_fraction(std::string_view token) {
  if (token.empty()) {
    throw std::invalid_argument("katakana_fraction: empty token");
  }
  const std::u32string cps = decode_utf8(token);
  std::size_t kana = 0;
  for (char32_t c : cps) {
    if (c >= 0x30A0 && c <= 0x30FF) ++kana;
  }
  return static_cast<double>(kana) / static_cast<double>(cps.size());
}

std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return n;
  if (n == 0) return m;
  std::vector<std::size_t> col(m + 1);
  for (std::size_t y = 0; y <= m; ++y) col[y] = y;
  for (std::size_t x = 1; x <= n; ++x) {
    std::size_t diag = col[0];
    col[0] = x;
    for (std::size_t y = 1; y <= m; ++y) {
      const std::size_t save = col[y];
      col[y] = std::min({col[y] + 1, col[y - 1] + 1,
                         diag + (a[y - 1] == b[x - 1] ? 0 : 1)});
      diag = save;
    }
  }
  return col[m];
}

double orthographic_similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("orthographic_similarity: empty input");
  }
  std::u32string ua = decode_utf8(a);
  std::u32string ub = decode_utf8(b);
  for (auto& c : ua) c = fold_char(c);
  for (auto& c : ub) c = fold_char(c);
  const std::size_t d = levenshtein(ua, ub);
  const std::size_t denom = std::max(ua.size(), ub.size());
  return 1.0 - static_cast<double>(d) / static_cast<double>(denom);
}

}  // namespace qe::text
