#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "groundkit/detail/bytes.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/rng.hpp"
#include "groundkit/text.hpp"

namespace groundkit {

/// Source of sentence embeddings for the phrase-similarity metrics.
/// Implementations must be deterministic, return unit-norm vectors, and be
/// safe for concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  /// Short label recorded in reports so scores are attributable.
  virtual std::string name() const = 0;
};

/// Deterministic fallback: every token hashes to a fixed pseudo-random unit
/// direction; a phrase embeds as the normalized mean of its token vectors.
/// Identical phrases embed identically; no semantic claim is made.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dimension = 64) : dimension_(dimension) {
    if (dimension_ == 0) throw EmbeddingError("embedding dimension must be >= 1");
  }

  std::size_t dimension() const override { return dimension_; }

  std::vector<double> embed(const std::string& text) const override {
    std::vector<double> acc(dimension_, 0.0);
    std::vector<std::string> tokens = tokenize(text);
    for (const auto& token : tokens) {
      SplitMix64 rng(fnv1a64(token));
      for (std::size_t i = 0; i < dimension_; ++i) acc[i] += rng.next_double(-1.0, 1.0);
    }
    return normalized(acc);
  }

  std::string name() const override { return "hash-fallback"; }

 private:
  std::vector<double> normalized(std::vector<double> v) const {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      std::fill(v.begin(), v.end(), 0.0);
      v[0] = 1.0;  // degenerate input: fixed basis direction
      return v;
    }
    for (double& x : v) x /= norm;
    return v;
  }

  std::size_t dimension_;
};

/// Binary embedding table. Layout, little-endian throughout:
///   magic "EMB1" | u32 dimension | u32 count |
///   count x ( u16 key_bytes | key (UTF-8) | dimension x f32 )
/// Keys are exact phrase strings. Vectors are re-normalized at load.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::string& path) : label_("file:" + path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);
    char magic[4];
    detail::get_bytes(in, magic, 4);
    if (std::string_view(magic, 4) != "EMB1")
      throw IoError("bad magic in embedding file: " + path);
    dimension_ = detail::read_le<std::uint32_t>(in);
    if (dimension_ == 0) throw IoError("embedding file declares dimension 0: " + path);
    std::uint32_t count = detail::read_le<std::uint32_t>(in);
    vectors_.reserve(count);
    for (std::uint32_t e = 0; e < count; ++e) {
      std::uint16_t key_len = detail::read_le<std::uint16_t>(in);
      std::string key(key_len, '\0');
      if (key_len) detail::get_bytes(in, key.data(), key_len);
      std::vector<double> vec(dimension_);
      double norm = 0.0;
      for (std::uint32_t i = 0; i < dimension_; ++i) {
        vec[i] = static_cast<double>(detail::read_f32_le(in));
        norm += vec[i] * vec[i];
      }
      norm = std::sqrt(norm);
      if (norm < 1e-12)
        throw IoError("zero-norm vector for key \"" + key + "\" in " + path);
      for (double& x : vec) x /= norm;
      vectors_.emplace(std::move(key), std::move(vec));
    }
  }

  std::size_t dimension() const override { return dimension_; }

  std::vector<double> embed(const std::string& text) const override {
    auto it = vectors_.find(text);
    if (it == vectors_.end())
      throw EmbeddingError("no embedding for phrase \"" + text + "\"");
    return it->second;
  }

  std::string name() const override { return label_; }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::string label_;
};

/// Write an EMB1 table; float precision is the file format's, not the
/// provider's.
inline void write_embedding_file(const std::string& path, std::uint32_t dimension,
                                 const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  detail::put_bytes(out, "EMB1", 4);
  detail::write_le<std::uint32_t>(out, dimension);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [key, vec] : entries) {
    if (vec.size() != dimension)
      throw IoError("vector for key \"" + key + "\" has wrong dimension");
    if (key.size() > 0xFFFF) throw IoError("embedding key longer than 65535 bytes");
    detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
    detail::put_bytes(out, key.data(), key.size());
    for (float x : vec) detail::write_f32_le(out, x);
  }
  if (!out) throw IoError("short write to embedding file: " + path);
}

}  // namespace groundkit
