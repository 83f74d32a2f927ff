#include "qe/meteor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "qe/text.hpp"

namespace qe::meteor {

void MeteorConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("meteor: alpha must be in (0,1)");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("meteor: beta must be > 0");
  }
  if (!(gamma_pen >= 0.0 && gamma_pen < 1.0)) {
    throw std::invalid_argument("meteor: gamma_pen must be in [0,1)");
  }
  if (matchers.empty() || matchers.front() != Matcher::exact) {
    throw std::invalid_argument("meteor: matcher list must begin with exact");
  }
  if (matchers.size() > 2) {
    throw std::invalid_argument("meteor: too many matchers");
  }
}

std::string stem(std::string_view token, std::string_view lang) {
  static const std::vector<std::string> kEn = {"ing", "ed", "es", "s"};
  static const std::vector<std::string> kFr = {"ent", "er", "es", "ez", "e", "s"};
  static const std::vector<std::string> kIt = {"re", "a", "e", "i", "o"};
  const std::vector<std::string>* suffixes = nullptr;
  if (lang == "en") suffixes = &kEn;
  else if (lang == "fr") suffixes = &kFr;
  else if (lang == "it") suffixes = &kIt;
  if (!suffixes) return std::string(token);

  const std::u32string cps = text::decode_utf8(token);
  for (const auto& suf : *suffixes) {
    const std::u32string s = text::decode_utf8(suf);
    if (cps.size() >= s.size() + 3 &&
        std::equal(s.begin(), s.end(), cps.end() - s.size())) {
      return text::encode_utf8(cps.substr(0, cps.size() - s.size()));
    }
  }
  return std::string(token);
}

namespace {

// Minimum-chunk search over stage-valid alignments. Match counts per class
// are fixed by the stage structure (exact quotas per surface form, stem
// quotas per stem class on the residue), so the search only decides which
// instances pair up, branch-and-bounding on the chunk count.
struct ChunkSearch {
  int H = 0, R = 0;
  std::vector<int> hsurf, hstem, rsurf, rstem;
  std::vector<int> rem_ex;         // per surface: exact matches still owed
  std::vector<int> rem_st;         // per stem: stem matches still owed
  std::vector<int> ref_st_budget;  // per surface: refs spendable on stem matches
  std::vector<int> sup_surf;       // hyp tokens at >= current position, per surface
  std::vector<int> free_stem;      // per stem: hyp supply beyond exact reservations
  std::vector<char> used;
  int target = 0;
  int best = std::numeric_limits<int>::max();
  long long nodes = 0;
  static constexpr long long kNodeCap = 2'000'000;
  bool use_stem = false;

  void dfs(int i, int matched, int chunks, int cont_j) {
    if (matched == target) {
      best = std::min(best, chunks);
      return;
    }
    const int lb = chunks + (cont_j >= 0 ? 0 : 1);
    if (lb >= best || i >= H) return;
    if (++nodes > kNodeCap) return;

    const int s = hsurf[i];
    const int t = hstem[i];

    auto try_match = [&](int j) {
      if (used[j]) return;
      const bool exact = rsurf[j] == s;
      if (exact) {
        if (rem_ex[s] <= 0) return;
      } else {
        if (!use_stem || rstem[j] != t || rem_st[t] <= 0) return;
        if (ref_st_budget[rsurf[j]] <= 0) return;
        // This hyp token must not be needed for its surface's exact quota.
        if (sup_surf[s] - 1 < rem_ex[s]) return;
      }
      used[j] = 1;
      --sup_surf[s];
      if (exact) {
        --rem_ex[s];
      } else {
        --rem_st[t];
        --free_stem[t];
        --ref_st_budget[rsurf[j]];
      }
      dfs(i + 1, matched + 1, chunks + (j == cont_j ? 0 : 1), j + 1);
      if (exact) {
        ++rem_ex[s];
      } else {
        ++rem_st[t];
        ++free_stem[t];
        ++ref_st_budget[rsurf[j]];
      }
      ++sup_surf[s];
      used[j] = 0;
    };

    if (cont_j >= 0 && cont_j < R) try_match(cont_j);
    for (int j = 0; j < R; ++j) {
      if (j != cont_j) try_match(j);
    }
    // Skipping is only legal while the remaining supply still covers quotas.
    if (sup_surf[s] - 1 >= rem_ex[s] && free_stem[t] - 1 >= rem_st[t]) {
      --sup_surf[s];
      --free_stem[t];
      dfs(i + 1, matched, chunks, -1);
      ++free_stem[t];
      ++sup_surf[s];
    }
  }
};

int intern(std::unordered_map<std::string, int>& ids, const std::string& key) {
  auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
  return it->second;
}

}  // namespace

AlignStats align_tokens(const std::vector<std::string>& hyp,
                        const std::vector<std::string>& ref, bool use_stem,
                        std::string_view lang) {
  ChunkSearch cs;
  cs.H = static_cast<int>(hyp.size());
  cs.R = static_cast<int>(ref.size());
  cs.use_stem = use_stem;
  if (cs.H == 0 || cs.R == 0) return {0, 0};

  std::unordered_map<std::string, int> surf_ids, stem_ids;
  auto surf_of = [&](const std::string& w) { return intern(surf_ids, w); };
  auto stem_of = [&](const std::string& w) {
    return intern(stem_ids, use_stem ? stem(w, lang) : w);
  };
  for (const auto& w : hyp) {
    cs.hsurf.push_back(surf_of(w));
    cs.hstem.push_back(stem_of(w));
  }
  for (const auto& w : ref) {
    cs.rsurf.push_back(surf_of(w));
    cs.rstem.push_back(stem_of(w));
  }
  const int nsurf = static_cast<int>(surf_ids.size());
  const int nstem = static_cast<int>(stem_ids.size());

  std::vector<int> hc(nsurf, 0), rc(nsurf, 0);
  std::vector<int> hsc(nstem, 0), rsc(nstem, 0);
  for (int i = 0; i < cs.H; ++i) ++hc[cs.hsurf[i]];
  for (int j = 0; j < cs.R; ++j) ++rc[cs.rsurf[j]];

  // Stage 1 quota: exact matches per surface form.
  cs.rem_ex.assign(nsurf, 0);
  cs.ref_st_budget.assign(nsurf, 0);
  int m = 0;
  for (int w = 0; w < nsurf; ++w) {
    cs.rem_ex[w] = std::min(hc[w], rc[w]);
    cs.ref_st_budget[w] = rc[w] - cs.rem_ex[w];
    m += cs.rem_ex[w];
  }
  // Map each surface's exact quota onto its stem class.
  std::vector<int> surf_stem(nsurf, -1);
  for (int i = 0; i < cs.H; ++i) surf_stem[cs.hsurf[i]] = cs.hstem[i];
  for (int j = 0; j < cs.R; ++j) surf_stem[cs.rsurf[j]] = cs.rstem[j];
  std::vector<int> ex_by_stem(nstem, 0);
  for (int w = 0; w < nsurf; ++w) {
    if (surf_stem[w] >= 0) ex_by_stem[surf_stem[w]] += cs.rem_ex[w];
  }

  // Stage 2 quota: stem matches on the residue, per stem class.
  cs.rem_st.assign(nstem, 0);
  if (use_stem) {
    for (int i = 0; i < cs.H; ++i) ++hsc[cs.hstem[i]];
    for (int j = 0; j < cs.R; ++j) ++rsc[cs.rstem[j]];
    for (int s = 0; s < nstem; ++s) {
      cs.rem_st[s] = std::min(hsc[s] - ex_by_stem[s], rsc[s] - ex_by_stem[s]);
      if (cs.rem_st[s] < 0) cs.rem_st[s] = 0;
      m += cs.rem_st[s];
    }
  }
  cs.target = m;
  if (m == 0) return {0, 0};

  cs.sup_surf = hc;
  cs.free_stem.assign(nstem, 0);
  {
    std::vector<int> sup_stem(nstem, 0);
    for (int i = 0; i < cs.H; ++i) ++sup_stem[cs.hstem[i]];
    for (int s = 0; s < nstem; ++s) {
      cs.free_stem[s] = sup_stem[s] - ex_by_stem[s];
    }
  }
  cs.used.assign(cs.R, 0);
  cs.dfs(0, 0, 0, -1);
  return {m, cs.best};
}

MeteorScore meteor_score(const std::vector<std::string>& hypothesis,
                         const std::vector<std::string>& reference,
                         const MeteorConfig& cfg) {
  cfg.validate();
  if (reference.empty()) {
    throw std::runtime_error("meteor_score: empty reference");
  }
  MeteorScore out;
  if (hypothesis.empty()) return out;

  const bool use_stem =
      std::find(cfg.matchers.begin(), cfg.matchers.end(), Matcher::stem) !=
      cfg.matchers.end();
  const AlignStats a = align_tokens(hypothesis, reference, use_stem, cfg.lang);
  out.matches = a.matches;
  out.chunks = a.chunks;
  if (a.matches == 0) return out;

  const double m = static_cast<double>(a.matches);
  out.precision = m / static_cast<double>(hypothesis.size());
  out.recall = m / static_cast<double>(reference.size());
  const double fmean =
      (out.precision * out.recall) /
      (cfg.alpha * out.precision + (1.0 - cfg.alpha) * out.recall);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = cfg.gamma_pen * std::pow(frag, cfg.beta);
  out.score = fmean * (1.0 - penalty);
  return out;
}

CorpusScores score_corpus(const corpus::Corpus& c, const MeteorConfig& cfg) {
  MeteorConfig lang_cfg = cfg;
  lang_cfg.lang = c.lang_pair.tgt;
  lang_cfg.validate();

  CorpusScores out;
  double sum = 0.0;
  for (const auto& r : c.records) {
    CorpusScores::Entry e;
    e.id = r.id;
    try {
      auto hyp = text::tokenize(r.interp, c.lang_pair.tgt).tokens;
      auto ref = text::tokenize(r.reference, c.lang_pair.tgt).tokens;
      for (auto& t : hyp) t = text::fold_case(t);
      for (auto& t : ref) t = text::fold_case(t);
      if (ref.empty()) {
        throw std::runtime_error("reference has no tokens");
      }
      e.score = meteor_score(hyp, ref, lang_cfg);
      sum += e.score->score;
      ++out.scored;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.entries.push_back(std::move(e));
  }
  if (out.scored > 0) out.mean = sum / static_cast<double>(out.scored);
  return out;
}

}  // namespace qe::meteor
