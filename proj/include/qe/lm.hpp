#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qe::lm {

inline constexpr const char* kUnknownToken = "<unk>";
inline constexpr const char* kSentStart = "<s>";
inline constexpr const char* kSentEnd = "</s>";
inline constexpr const char* kNullWord = "<null>";

// Counts up to trigrams. N-gram keys are the tokens joined with a single
// space (tokens never contain whitespace). Unigram counts cover the raw
// tokens only; bigram/trigram streams are padded with <s>/</s>.
struct NgramModel {
  int order = 1;
  std::array<std::map<std::string, long long>, 3> counts;     // [n-1]
  std::array<std::map<std::string, long long>, 3> histories;  // prefix counts, n >= 2
  long long vocab_size = 0;
  long long total_tokens = 0;
  // Lowest length-normalized log-probability seen on the training corpus;
  // callers use it (minus 1) as the floor for empty utterances.
  double min_sentence_logprob = 0.0;
};

std::string join_tokens(const std::vector<std::string>& toks, std::size_t from,
                        std::size_t n);

NgramModel train_ngram(const std::vector<std::vector<std::string>>& corpus,
                       int order);

// Length-normalized log P under the Laplace-smoothed highest-order estimate,
// backing off when the history is unseen. OOV tokens map to <unk>.
double logprob(const NgramModel& m, const std::vector<std::string>& tokens);

enum class QuartileClass { Q1, Q2, Q3, Q4, unseen };

// Per-order frequency quartiles over the observed n-gram types (padding
// n-grams excluded). Classification is by percentile rank of the training
// count, so the most frequent type is always Q4 even under heavy ties.
struct FrequencyQuartiles {
  std::array<std::vector<long long>, 3> sorted_counts;  // ascending, per order
  std::array<long long, 3> q1{}, q2{}, q3{};
};

FrequencyQuartiles make_quartiles(const NgramModel& m);

QuartileClass quartile_class(const NgramModel& m, const FrequencyQuartiles& q,
                             const std::vector<std::string>& ngram);

// IBM Model 1 lexical translation table, t[source][target] = p(target|source).
struct LexicalTable {
  std::map<std::string, std::map<std::string, double>> t;
};

using ParallelCorpus =
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>;

LexicalTable train_model1(const ParallelCorpus& parallel, int iterations = 5);

// Training-data log-likelihood under the table; EM never decreases it.
double model1_loglik(const LexicalTable& t, const ParallelCorpus& parallel);

int translations_per_word(const LexicalTable& t, const std::string& source_word,
                          double threshold);

// Versioned JSON documents with sorted keys for byte-stable output.
nlohmann::json ngram_to_json(const NgramModel& m);       // "ngram-v1"
NgramModel ngram_from_json(const nlohmann::json& j);
nlohmann::json lex_to_json(const LexicalTable& t);       // "lex-v1"
LexicalTable lex_from_json(const nlohmann::json& j);

}  // namespace qe::lm
