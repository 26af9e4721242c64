#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "groundkit/errors.hpp"

namespace groundkit {

/// Pixel-accurate binary segmentation mask, row-major, 1 = foreground.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> d)
      : height(h), width(w), data(std::move(d)) {}

  static BinaryMask zeros(std::size_t h, std::size_t w) {
    return BinaryMask(h, w, std::vector<std::uint8_t>(h * w, 0));
  }

  std::size_t size() const { return height * width; }

  std::uint8_t at(std::size_t row, std::size_t col) const { return data[row * width + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return data[row * width + col]; }

  /// Foreground pixel count.
  std::size_t area() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
  }

  void validate() const {
    if (height == 0 || width == 0) throw ShapeError("mask dimensions must be >= 1");
    if (data.size() != height * width)
      throw ShapeError("mask data length " + std::to_string(data.size()) + " != " +
                       std::to_string(height) + "x" + std::to_string(width));
    for (auto v : data)
      if (v > 1) throw ShapeError("mask data must be 0/1");
  }

  bool operator==(const BinaryMask&) const = default;
};

/// Run-length form: alternating background/foreground runs, row-major,
/// starting with background (first count may be 0).
struct RleMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> counts;

  void validate() const {
    if (height == 0 || width == 0) throw ShapeError("mask dimensions must be >= 1");
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0 && i != 0)
        throw ShapeError("zero-length run at position " + std::to_string(i));
      total += counts[i];
    }
    if (total != static_cast<std::uint64_t>(height) * width)
      throw ShapeError("run counts sum to " + std::to_string(total) + ", expected " +
                       std::to_string(height * width));
  }

  bool operator==(const RleMask&) const = default;
};

/// Predicted per-pixel foreground probabilities in [0, 1].
struct SoftMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> probs;

  SoftMask() = default;
  SoftMask(std::size_t h, std::size_t w, std::vector<double> p)
      : height(h), width(w), probs(std::move(p)) {}

  std::size_t size() const { return height * width; }

  void validate() const {
    if (height == 0 || width == 0) throw ShapeError("mask dimensions must be >= 1");
    if (probs.size() != height * width) throw ShapeError("soft mask length mismatch");
    for (double p : probs)
      if (!(p >= 0.0 && p <= 1.0)) throw ShapeError("probability outside [0,1]");
  }
};

inline RleMask rle_encode(const BinaryMask& mask) {
  mask.validate();
  RleMask rle;
  rle.height = mask.height;
  rle.width = mask.width;
  std::uint64_t run = 0;
  std::uint8_t value = 0;  // background first
  for (std::uint8_t px : mask.data) {
    if (px != value) {
      rle.counts.push_back(run);
      run = 0;
      value = px;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

inline BinaryMask rle_decode(const RleMask& rle) {
  rle.validate();
  BinaryMask mask = BinaryMask::zeros(rle.height, rle.width);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint64_t count : rle.counts) {
    for (std::uint64_t i = 0; i < count; ++i) mask.data[pos++] = value;
    value = !value;
  }
  return mask;
}

/// Intersection-over-union of two same-shape masks. Two empty masks score 1
/// (vacuous match) so matched-pair metrics stay defined on degenerate inputs.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width)
    throw ShapeError("iou: mask dimensions differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Same metric computed directly on the run-length form, no decode.
inline double iou(const RleMask& a, const RleMask& b) {
  if (a.height != b.height || a.width != b.width)
    throw ShapeError("iou: mask dimensions differ");
  a.validate();
  b.validate();
  std::uint64_t inter = 0, uni = 0;
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = ia < a.counts.size() ? a.counts[ia] : 0;
  std::uint64_t rb = ib < b.counts.size() ? b.counts[ib] : 0;
  bool va = false, vb = false;  // run parity: even runs are background
  std::uint64_t remaining = static_cast<std::uint64_t>(a.height) * a.width;
  // Skip leading zero runs so the cursors always sit on a live run.
  while (ra == 0 && ia + 1 < a.counts.size()) { ra = a.counts[++ia]; va = !va; }
  while (rb == 0 && ib + 1 < b.counts.size()) { rb = b.counts[++ib]; vb = !vb; }
  while (remaining > 0) {
    std::uint64_t step = std::min(ra, rb);
    if (va && vb) inter += step;
    if (va || vb) uni += step;
    remaining -= step;
    ra -= step;
    rb -= step;
    while (ra == 0 && ia + 1 < a.counts.size()) { ra = a.counts[++ia]; va = !va; }
    while (rb == 0 && ib + 1 < b.counts.size()) { rb = b.counts[++ib]; vb = !vb; }
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct CosegScores {
  double precision = 0.0;  // pixel accuracy, (TP+TN)/(H*W)
  double jaccard = 0.0;
};

inline CosegScores coseg_scores(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw ShapeError("coseg_scores: mask dimensions differ");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    if (pred.data[i] == gt.data[i]) ++agree;
  CosegScores s;
  s.precision = static_cast<double>(agree) / static_cast<double>(pred.size());
  s.jaccard = iou(pred, gt);
  return s;
}

/// Mean mask-area/image-area ratio across targets, weighted by the relative
/// scale disparity w = min ratio / max ratio (w = 1 for a single target).
inline double visibility_score(const std::vector<BinaryMask>& targets,
                               const std::vector<std::uint64_t>& image_areas) {
  if (targets.empty()) throw ShapeError("visibility_score: no targets");
  if (targets.size() != image_areas.size())
    throw ShapeError("visibility_score: targets/areas length mismatch");
  double sum = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (image_areas[i] == 0) throw ShapeError("visibility_score: zero image area");
    double r = static_cast<double>(targets[i].area()) / static_cast<double>(image_areas[i]);
    sum += r;
    if (i == 0) {
      lo = hi = r;
    } else {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  if (hi == 0.0) return 0.0;  // every target empty
  double weight = (targets.size() == 1) ? 1.0 : lo / hi;
  return (sum / static_cast<double>(targets.size())) * weight;
}

}  // namespace groundkit
