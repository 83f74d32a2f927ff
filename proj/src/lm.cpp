#include "qe/lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qe::lm {

using nlohmann::json;

std::string join_tokens(const std::vector<std::string>& toks, std::size_t from,
                        std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key += ' ';
    key += toks[from + i];
  }
  return key;
}

NgramModel train_ngram(const std::vector<std::vector<std::string>>& corpus,
                       int order) {
  if (order < 1 || order > 3) {
    throw std::invalid_argument("train_ngram: order must be in 1..3");
  }
  if (corpus.empty()) {
    throw std::runtime_error("train_ngram: empty corpus");
  }
  NgramModel m;
  m.order = order;
  for (const auto& sent : corpus) {
    m.total_tokens += static_cast<long long>(sent.size());
    for (const auto& tok : sent) ++m.counts[0][tok];
    for (int n = 2; n <= order; ++n) {
      std::vector<std::string> padded;
      padded.reserve(sent.size() + n);
      for (int i = 0; i < n - 1; ++i) padded.push_back(kSentStart);
      padded.insert(padded.end(), sent.begin(), sent.end());
      padded.push_back(kSentEnd);
      for (std::size_t i = 0; i + n <= padded.size(); ++i) {
        ++m.counts[n - 1][join_tokens(padded, i, n)];
        ++m.histories[n - 1][join_tokens(padded, i, n - 1)];
      }
    }
  }
  if (m.total_tokens == 0) {
    throw std::runtime_error("train_ngram: corpus has no tokens");
  }
  m.vocab_size = static_cast<long long>(m.counts[0].size());

  double min_lp = 0.0;
  bool any = false;
  for (const auto& sent : corpus) {
    if (sent.empty()) continue;
    const double lp = logprob(m, sent);
    if (!any || lp < min_lp) min_lp = lp;
    any = true;
  }
  m.min_sentence_logprob = min_lp;
  return m;
}

namespace {

long long lookup(const std::map<std::string, long long>& counts,
                 const std::string& key) {
  auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

}  // namespace

double logprob(const NgramModel& m, const std::vector<std::string>& tokens) {
  if (tokens.empty()) {
    throw std::invalid_argument("logprob: empty token list");
  }
  const double v = static_cast<double>(m.vocab_size);

  // Map OOV tokens to the reserved unknown symbol up front.
  std::vector<std::string> mapped;
  mapped.reserve(tokens.size());
  for (const auto& t : tokens) {
    mapped.push_back(m.counts[0].count(t) ? t : kUnknownToken);
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    double p = 0.0;
    bool scored = false;
    for (int n = m.order; n >= 2 && !scored; --n) {
      // History of n-1 tokens ending just before position i, with <s> padding.
      std::vector<std::string> ctx;
      for (int k = n - 1; k >= 1; --k) {
        const long long pos = static_cast<long long>(i) - k;
        ctx.push_back(pos < 0 ? kSentStart : mapped[pos]);
      }
      const std::string hist = join_tokens(ctx, 0, ctx.size());
      const long long hist_count = lookup(m.histories[n - 1], hist);
      if (hist_count == 0) continue;  // back off
      ctx.push_back(mapped[i]);
      const long long c = lookup(m.counts[n - 1], join_tokens(ctx, 0, ctx.size()));
      p = (static_cast<double>(c) + 1.0) / (static_cast<double>(hist_count) + v);
      scored = true;
    }
    if (!scored) {
      const long long c = lookup(m.counts[0], mapped[i]);
      p = (static_cast<double>(c) + 1.0) /
          (static_cast<double>(m.total_tokens) + v);
    }
    sum += std::log(p);
  }
  return sum / static_cast<double>(mapped.size());
}

namespace {

bool has_padding(const std::string& key) {
  return key.find(kSentStart) != std::string::npos ||
         key.find(kSentEnd) != std::string::npos;
}

}  // namespace

FrequencyQuartiles make_quartiles(const NgramModel& m) {
  FrequencyQuartiles q;
  for (int n = 1; n <= m.order; ++n) {
    auto& sc = q.sorted_counts[n - 1];
    for (const auto& [key, cnt] : m.counts[n - 1]) {
      if (n >= 2 && has_padding(key)) continue;
      sc.push_back(cnt);
    }
    std::sort(sc.begin(), sc.end());
    if (!sc.empty()) {
      const std::size_t k = sc.size();
      auto at = [&](double frac) {
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(frac * static_cast<double>(k)));
        if (idx == 0) idx = 1;
        return sc[idx - 1];
      };
      q.q1[n - 1] = at(0.25);
      q.q2[n - 1] = at(0.50);
      q.q3[n - 1] = at(0.75);
    }
  }
  return q;
}

QuartileClass quartile_class(const NgramModel& m, const FrequencyQuartiles& q,
                             const std::vector<std::string>& ngram) {
  const std::size_t n = ngram.size();
  if (n == 0 || static_cast<int>(n) > m.order) {
    throw std::invalid_argument("quartile_class: ngram size out of range");
  }
  const long long c = lookup(m.counts[n - 1], join_tokens(ngram, 0, n));
  if (c == 0) return QuartileClass::unseen;
  const auto& sc = q.sorted_counts[n - 1];
  const auto le = std::upper_bound(sc.begin(), sc.end(), c) - sc.begin();
  const double pct =
      static_cast<double>(le) / static_cast<double>(sc.size());
  if (pct <= 0.25) return QuartileClass::Q1;
  if (pct <= 0.50) return QuartileClass::Q2;
  if (pct <= 0.75) return QuartileClass::Q3;
  return QuartileClass::Q4;
}

LexicalTable train_model1(const ParallelCorpus& parallel, int iterations) {
  if (iterations < 1) {
    throw std::invalid_argument("train_model1: iterations must be >= 1");
  }
  if (parallel.empty()) {
    throw std::runtime_error("train_model1: empty parallel corpus");
  }

  // Uniform initialization over co-occurring (source, target) pairs; the
  // null word co-occurs with every target word.
  LexicalTable table;
  for (const auto& [src, tgt] : parallel) {
    for (const auto& f : tgt) {
      table.t[kNullWord][f] = 1.0;
      for (const auto& e : src) table.t[e][f] = 1.0;
    }
  }
  for (auto& [e, row] : table.t) {
    const double u = 1.0 / static_cast<double>(row.size());
    for (auto& [f, p] : row) p = u;
  }

  for (int it = 0; it < iterations; ++it) {
    std::map<std::string, std::map<std::string, double>> cnt;
    for (const auto& [src, tgt] : parallel) {
      for (const auto& f : tgt) {
        double denom = table.t[kNullWord][f];
        for (const auto& e : src) denom += table.t[e][f];
        if (denom <= 0) continue;
        cnt[kNullWord][f] += table.t[kNullWord][f] / denom;
        for (const auto& e : src) cnt[e][f] += table.t[e][f] / denom;
      }
    }
    for (auto& [e, row] : cnt) {
      double total = 0;
      for (const auto& [f, c] : row) total += c;
      if (total <= 0) continue;
      auto& trow = table.t[e];
      for (const auto& [f, c] : row) trow[f] = c / total;
    }
  }
  return table;
}

double model1_loglik(const LexicalTable& table, const ParallelCorpus& parallel) {
  double ll = 0.0;
  for (const auto& [src, tgt] : parallel) {
    const double len_norm = 1.0 / static_cast<double>(src.size() + 1);
    for (const auto& f : tgt) {
      double p = 0.0;
      auto null_it = table.t.find(kNullWord);
      if (null_it != table.t.end()) {
        auto it = null_it->second.find(f);
        if (it != null_it->second.end()) p += it->second;
      }
      for (const auto& e : src) {
        auto row = table.t.find(e);
        if (row == table.t.end()) continue;
        auto it = row->second.find(f);
        if (it != row->second.end()) p += it->second;
      }
      ll += std::log(std::max(p * len_norm, 1e-300));
    }
  }
  return ll;
}

int translations_per_word(const LexicalTable& table,
                          const std::string& source_word, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("translations_per_word: threshold not in (0,1)");
  }
  auto row = table.t.find(source_word);
  if (row == table.t.end()) return 0;
  int n = 0;
  for (const auto& [f, p] : row->second) {
    if (p > threshold) ++n;
  }
  return n;
}

json ngram_to_json(const NgramModel& m) {
  json j;
  j["format"] = "ngram-v1";
  j["order"] = m.order;
  j["vocab_size"] = m.vocab_size;
  j["total_tokens"] = m.total_tokens;
  j["min_sentence_logprob"] = m.min_sentence_logprob;
  for (int n = 1; n <= m.order; ++n) {
    j["counts_" + std::to_string(n)] = m.counts[n - 1];
    if (n >= 2) j["histories_" + std::to_string(n)] = m.histories[n - 1];
  }
  return j;
}

NgramModel ngram_from_json(const json& j) {
  if (j.value("format", "") != "ngram-v1") {
    throw std::runtime_error("ngram_from_json: unexpected format");
  }
  NgramModel m;
  m.order = j.at("order").get<int>();
  m.vocab_size = j.at("vocab_size").get<long long>();
  m.total_tokens = j.at("total_tokens").get<long long>();
  m.min_sentence_logprob = j.at("min_sentence_logprob").get<double>();
  for (int n = 1; n <= m.order; ++n) {
    j.at("counts_" + std::to_string(n)).get_to(m.counts[n - 1]);
    if (n >= 2) j.at("histories_" + std::to_string(n)).get_to(m.histories[n - 1]);
  }
  return m;
}

json lex_to_json(const LexicalTable& t) {
  json j;
  j["format"] = "lex-v1";
  j["t"] = t.t;
  return j;
}

LexicalTable lex_from_json(const json& j) {
  if (j.value("format", "") != "lex-v1") {
    throw std::runtime_error("lex_from_json: unexpected format");
  }
  LexicalTable t;
  j.at("t").get_to(t.t);
  return t;
}

}  // namespace qe::lm
