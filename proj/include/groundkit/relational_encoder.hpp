#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "groundkit/errors.hpp"
#include "groundkit/matrix.hpp"

namespace groundkit {

/// Per-image visual features: num_images() matrices, each L_V x D_V.
struct FeatureStack {
  std::vector<Matrix> images;

  std::size_t num_images() const { return images.size(); }
  std::size_t seq_len() const { return images.empty() ? 0 : images[0].rows; }
  std::size_t feature_dim() const { return images.empty() ? 0 : images[0].cols; }

  void validate() const {
    if (images.empty()) throw ShapeError("feature stack has no images");
    for (const auto& m : images) {
      if (m.rows != seq_len() || m.cols != feature_dim())
        throw ShapeError("feature stack matrices differ in shape");
      if (!m.all_finite()) throw ShapeError("feature stack contains non-finite values");
    }
  }
};

/// Learnable query sets: global queries q0 and relational queries c0 share
/// L_I x D_I; optional instruction tokens (L_Q x D_I, L_Q >= 0) join the
/// per-image attention as extra queries whose outputs are discarded.
struct QueryBank {
  Matrix q0;
  Matrix c0;
  Matrix instruction_tokens;  // 0 x D_I when unused

  void validate() const {
    if (!q0.same_shape(c0)) throw ShapeError("q0 and c0 must share dimensions");
    if (q0.rows == 0 || q0.cols == 0) throw ShapeError("query bank is empty");
    if (instruction_tokens.rows > 0 && instruction_tokens.cols != q0.cols)
      throw ShapeError("instruction tokens width differs from query width");
  }
};

/// One cross-attention block. Queries live in D_I; keys/values are mapped
/// from D_V by w_key/w_value. All projections use the row-vector convention
/// (x times W).
struct AttentionParams {
  Matrix w_query;   // D_I x D_I
  Matrix w_key;     // D_V x D_I
  Matrix w_value;   // D_V x D_I
  Matrix w_output;  // D_I x D_I
  std::size_t head_count = 1;

  void validate(std::size_t d_query, std::size_t d_kv) const {
    if (w_query.rows != d_query || w_query.cols != d_query)
      throw ShapeError("w_query must be D_I x D_I");
    if (w_key.rows != d_kv || w_key.cols != d_query) throw ShapeError("w_key must be D_V x D_I");
    if (w_value.rows != d_kv || w_value.cols != d_query)
      throw ShapeError("w_value must be D_V x D_I");
    if (w_output.rows != d_query || w_output.cols != d_query)
      throw ShapeError("w_output must be D_I x D_I");
    if (head_count == 0 || d_query % head_count != 0)
      throw ShapeError("head_count must divide D_I");
  }
};

/// Final map into the language-model token space: D_I x D weight plus bias.
struct LlmProjection {
  Matrix weight;  // D_I x D
  std::vector<double> bias;

  void validate(std::size_t d_in) const {
    if (weight.rows != d_in) throw ShapeError("projection weight rows must equal D_I");
    if (bias.size() != weight.cols) throw ShapeError("projection bias length must equal D");
  }
};

/// Row-concatenate the per-image features in image order, image 1 first:
/// (N_I * L_V) x D_V.
inline Matrix fuse_features(const FeatureStack& fs) {
  fs.validate();
  Matrix out(fs.num_images() * fs.seq_len(), fs.feature_dim());
  std::size_t row = 0;
  for (const auto& img : fs.images) {
    std::copy(img.data.begin(), img.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(row * out.cols));
    row += img.rows;
  }
  return out;
}

/// Scaled dot-product multi-head cross-attention. Per head:
/// softmax(Q_h K_h^T / sqrt(d_h)) V_h, computed with max-subtraction;
/// heads are concatenated and output-projected. When weights_out is given
/// it receives one M x N row-stochastic matrix per head.
inline Matrix cross_attention(const Matrix& queries, const Matrix& keys_values,
                              const AttentionParams& params,
                              std::vector<Matrix>* weights_out = nullptr) {
  params.validate(queries.cols, keys_values.cols);
  const std::size_t m = queries.rows;
  const std::size_t n = keys_values.rows;
  const std::size_t d = queries.cols;
  const std::size_t heads = params.head_count;
  const std::size_t d_h = d / heads;
  if (n == 0) throw ShapeError("cross_attention: no key/value rows");

  Matrix q = matmul(queries, params.w_query);      // M x D_I
  Matrix k = matmul(keys_values, params.w_key);    // N x D_I
  Matrix v = matmul(keys_values, params.w_value);  // N x D_I

  const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));
  Matrix context(m, d);
  if (weights_out) weights_out->assign(heads, Matrix(m, n));

  std::vector<double> scores(n);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * d_h;
    for (std::size_t i = 0; i < m; ++i) {
      double max_score = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < d_h; ++t) s += q.at(i, off + t) * k.at(j, off + t);
        scores[j] = s * scale;
        max_score = std::max(max_score, scores[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      for (std::size_t j = 0; j < n; ++j) scores[j] /= denom;
      if (weights_out)
        for (std::size_t j = 0; j < n; ++j) (*weights_out)[h].at(i, j) = scores[j];
      for (std::size_t t = 0; t < d_h; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += scores[j] * v.at(j, off + t);
        context.at(i, off + t) = acc;
      }
    }
  }
  return matmul(context, params.w_output);
}

/// Relational stage: attend the relational queries over the fused features
/// and add the result to the global queries (q' = q0 + C(c0, fused)).
inline Matrix enrich_queries(const QueryBank& qb, const Matrix& fused,
                             const AttentionParams& params_c) {
  qb.validate();
  Matrix c = cross_attention(qb.c0, fused, params_c);
  return add(qb.q0, c);
}

/// Per-image stage: run (queries ++ instruction tokens) against each image's
/// features, keep the first L_I output rows, and project into the LLM space.
/// Images are processed independently and assembled in image order.
inline std::vector<Matrix> attend_per_image(const FeatureStack& fs, const Matrix& queries,
                                            const Matrix& instruction_tokens,
                                            const AttentionParams& params_q,
                                            const LlmProjection& proj) {
  fs.validate();
  proj.validate(queries.cols);
  Matrix full = vstack(queries, instruction_tokens);
  std::vector<Matrix> outputs;
  outputs.reserve(fs.num_images());
  for (const auto& img : fs.images) {
    Matrix attended = take_rows(cross_attention(full, img, params_q), queries.rows);
    Matrix projected = matmul(attended, proj.weight);
    for (std::size_t r = 0; r < projected.rows; ++r)
      for (std::size_t c = 0; c < projected.cols; ++c) projected.at(r, c) += proj.bias[c];
    outputs.push_back(std::move(projected));
  }
  return outputs;
}

/// Full multi-image encoding: fuse, enrich the queries with the cross-image
/// relational representation, then attend each image independently.
/// Output: N_I matrices of L_I x D.
inline std::vector<Matrix> encode_images(const FeatureStack& fs, const QueryBank& qb,
                                         const AttentionParams& params_c,
                                         const AttentionParams& params_q,
                                         const LlmProjection& proj) {
  Matrix fused = fuse_features(fs);
  Matrix enriched = enrich_queries(qb, fused, params_c);
  return attend_per_image(fs, enriched, qb.instruction_tokens, params_q, proj);
}

/// Ablation baseline: replace every image's features by the element-wise
/// mean across images. The mean of each entry is computed over sorted
/// values, centered on the smallest, so the result is bit-for-bit invariant
/// under image permutation and exactly idempotent.
inline FeatureStack pooling_baseline(const FeatureStack& fs) {
  fs.validate();
  const std::size_t n = fs.num_images();
  Matrix mean(fs.seq_len(), fs.feature_dim());
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < mean.data.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) vals[j] = fs.images[j].data[i];
    std::sort(vals.begin(), vals.end());
    double acc = 0.0;
    for (std::size_t j = 1; j < n; ++j) acc += vals[j] - vals[0];
    mean.data[i] = vals[0] + acc / static_cast<double>(n);
  }
  FeatureStack out;
  out.images.assign(n, mean);
  return out;
}

/// Ablation baseline: per sequence position, concatenate the N_I feature
/// rows along the hidden axis, multiply by the square mixing matrix, and
/// split back into per-image rows.
inline FeatureStack projection_baseline(const FeatureStack& fs, const Matrix& mix) {
  fs.validate();
  const std::size_t n = fs.num_images();
  const std::size_t d = fs.feature_dim();
  const std::size_t wide = n * d;
  if (mix.rows != wide || mix.cols != wide)
    throw ShapeError("projection_baseline: mix must be (N_I*D_V) square, got " +
                     std::to_string(mix.rows) + "x" + std::to_string(mix.cols));
  FeatureStack out;
  out.images.assign(n, Matrix(fs.seq_len(), d));
  std::vector<double> row(wide), mixed(wide);
  for (std::size_t p = 0; p < fs.seq_len(); ++p) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < d; ++t) row[j * d + t] = fs.images[j].at(p, t);
    for (std::size_t c = 0; c < wide; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wide; ++k) acc += row[k] * mix.at(k, c);
      mixed[c] = acc;
    }
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < d; ++t) out.images[j].at(p, t) = mixed[j * d + t];
  }
  return out;
}

}  // namespace groundkit
