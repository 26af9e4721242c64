#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "groundkit/errors.hpp"

namespace groundkit {

/// Lowercase, strip punctuation to spaces, split on whitespace.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// IoU over the token *sets* of two phrases. Two empty sets score 1
/// (vacuous match, mirroring the mask convention).
inline double token_set_iou(std::string_view a, std::string_view b) {
  std::unordered_set<std::string> sa, sb;
  for (auto& t : tokenize(a)) sa.insert(std::move(t));
  for (auto& t : tokenize(b)) sb.insert(std::move(t));
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa)
    if (sb.count(t)) ++inter;
  std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Cosine similarity of two equal-length vectors; 0 if either has zero norm.
inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace groundkit
