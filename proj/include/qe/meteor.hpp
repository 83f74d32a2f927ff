#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qe/corpus.hpp"

namespace qe::meteor {

enum class Matcher { exact, stem };

struct MeteorConfig {
  double alpha = 0.9;      // precision/recall balance in the harmonic mean
  double beta = 3.0;       // fragmentation exponent
  double gamma_pen = 0.5;  // penalty weight
  std::vector<Matcher> matchers{Matcher::exact, Matcher::stem};
  std::string lang = "en";

  void validate() const;
};

struct MeteorScore {
  double score = 0.0;
  int matches = 0;
  int chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
};

// Light suffix stripping used by the stem matcher. Japanese (and any
// unlisted language) stems to the token itself, which makes the stem stage
// a no-op there.
std::string stem(std::string_view token, std::string_view lang);

struct AlignStats {
  int matches = 0;
  int chunks = 0;
};

// Stage-wise alignment: maximum exact matching first, then stem matching on
// the leftover tokens; among alignments of that (maximal) size, the one with
// the fewest chunks. Exact on every input small enough to search; inputs
// beyond the node budget keep the best alignment found.
AlignStats align_tokens(const std::vector<std::string>& hyp,
                        const std::vector<std::string>& ref, bool use_stem,
                        std::string_view lang);

MeteorScore meteor_score(const std::vector<std::string>& hypothesis,
                         const std::vector<std::string>& reference,
                         const MeteorConfig& cfg);

struct CorpusScores {
  struct Entry {
    std::string id;
    std::optional<MeteorScore> score;  // empty when the record failed
    std::string error;
  };
  std::vector<Entry> entries;
  double mean = 0.0;        // over successfully scored records
  std::size_t scored = 0;
};

// Scores each interpreter transcript against its reference translation,
// case-folded, with the stem language taken from the corpus target side.
// Per-record failures are flagged and excluded from the mean.
CorpusScores score_corpus(const corpus::Corpus& c, const MeteorConfig& cfg);

}  // namespace qe::meteor
