#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "groundkit/stemmer.hpp"
#include "groundkit/text.hpp"

namespace groundkit {

/// Knobs of the Banerjee–Lavie METEOR score. Defaults reproduce the classic
/// constants: Fmean = 10PR/(R+9P), penalty = 0.5*(chunks/matches)^3.
struct MeteorParams {
  double alpha = 0.9;    // recall weight in Fmean = PR / (alpha*P + (1-alpha)*R)
  double beta = 3.0;     // chunk fragmentation exponent
  double gamma = 0.5;    // penalty ceiling
  bool use_stemming = true;
  /// Unordered word pairs treated as synonyms (stage 3); empty = stage off.
  std::set<std::pair<std::string, std::string>> synonyms;

  bool synonym(const std::string& a, const std::string& b) const {
    return synonyms.count({a, b}) > 0 || synonyms.count({b, a}) > 0;
  }
};

/// Unigram METEOR with staged alignment: exact match, then Porter-stem
/// match, then optional synonym pairs. Each stage scans candidate tokens
/// left to right and takes the first unmatched reference token that fits.
inline double meteor_score(const std::string& candidate, const std::string& reference,
                           const MeteorParams& params = {}) {
  std::vector<std::string> cand = tokenize(candidate);
  std::vector<std::string> ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  // match_for[i] = reference index aligned to candidate token i, or npos.
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match_for(cand.size(), npos);
  std::vector<bool> ref_used(ref.size(), false);

  auto align = [&](auto&& equivalent) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (match_for[i] != npos) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (equivalent(cand[i], ref[j])) {
          match_for[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  };

  align([](const std::string& a, const std::string& b) { return a == b; });
  if (params.use_stemming) {
    std::vector<std::string> cand_stem(cand.size()), ref_stem(ref.size());
    for (std::size_t i = 0; i < cand.size(); ++i) cand_stem[i] = porter_stem(cand[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) ref_stem[j] = porter_stem(ref[j]);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (match_for[i] != npos) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (cand_stem[i] == ref_stem[j]) {
          match_for[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  }
  if (!params.synonyms.empty())
    align([&](const std::string& a, const std::string& b) { return params.synonym(a, b); });

  std::size_t matches = 0;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (match_for[i] != npos) ++matches;
  if (matches == 0) return 0.0;

  double p = static_cast<double>(matches) / static_cast<double>(cand.size());
  double r = static_cast<double>(matches) / static_cast<double>(ref.size());
  double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);

  // Chunks: maximal runs of matches consecutive in both sentences.
  std::size_t chunks = 0;
  std::size_t prev_cand = npos, prev_ref = npos;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (match_for[i] == npos) continue;
    bool contiguous = prev_cand != npos && i == prev_cand + 1 && match_for[i] == prev_ref + 1;
    if (!contiguous) ++chunks;
    prev_cand = i;
    prev_ref = match_for[i];
  }

  double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  double penalty = params.gamma * std::pow(frag, params.beta);
  return fmean * (1.0 - penalty);
}

}  // namespace groundkit
