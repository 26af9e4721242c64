#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "groundkit/embedding.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/mask.hpp"
#include "groundkit/meteor.hpp"
#include "groundkit/text.hpp"

namespace groundkit {

/// One grounded target: a phrase tied to a mask in one image of the sample.
struct TargetEntry {
  std::size_t image_index = 0;  // 1-based into EvalSample::images
  std::string phrase;
  RleMask mask;
};

/// One multi-image QA instance with ground-truth and predicted target sets.
struct EvalSample {
  std::string sample_id;
  std::vector<std::pair<std::size_t, std::size_t>> images;  // (height, width)
  std::string question;
  std::vector<TargetEntry> gt;
  std::vector<TargetEntry> pred;
  std::string gt_sentence;
  std::string pred_sentence;

  void validate() const {
    if (images.empty()) throw SchemaError("sample has no images");
    if (gt.empty()) throw SchemaError("sample has no ground-truth targets");
    auto check = [&](const TargetEntry& t, const char* role) {
      if (t.image_index < 1 || t.image_index > images.size())
        throw SchemaError(std::string(role) + " target image index " +
                          std::to_string(t.image_index) + " out of range");
      const auto& [h, w] = images[t.image_index - 1];
      if (t.mask.height != h || t.mask.width != w)
        throw SchemaError(std::string(role) + " mask is " + std::to_string(t.mask.height) +
                          "x" + std::to_string(t.mask.width) + " but image " +
                          std::to_string(t.image_index) + " is " + std::to_string(h) + "x" +
                          std::to_string(w));
      t.mask.validate();
    };
    for (const auto& t : gt) check(t, "gt");
    for (const auto& t : pred) check(t, "pred");
  }
};

/// Outcome of the one-to-one pred/gt assignment.
struct MatchResult {
  struct Pair {
    std::size_t pred_idx;
    std::size_t gt_idx;
    double iou;
    bool operator==(const Pair&) const = default;
  };
  std::vector<Pair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;

  std::size_t n_gt() const { return pairs.size() + unmatched_gt.size(); }
  std::size_t n_pred() const { return pairs.size() + unmatched_pred.size(); }
};

/// Greedy one-to-one assignment within each image: repeatedly take the
/// globally highest-IoU unassigned (pred, gt) candidate; ties prefer the
/// smaller gt index, then the smaller pred index. Zero-IoU pairs are still
/// recorded — thresholds are applied by the metrics downstream.
inline MatchResult match_masks(const std::vector<TargetEntry>& pred,
                               const std::vector<TargetEntry>& gt) {
  struct Candidate {
    double iou;
    std::size_t gt_idx;
    std::size_t pred_idx;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(pred.size() * gt.size() / 2 + 1);
  for (std::size_t j = 0; j < gt.size(); ++j)
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i].image_index == gt[j].image_index)
        candidates.push_back({iou(pred[i].mask, gt[j].mask), j, i});
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt_idx != b.gt_idx) return a.gt_idx < b.gt_idx;
    return a.pred_idx < b.pred_idx;
  });

  MatchResult result;
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  for (const auto& c : candidates) {
    if (pred_used[c.pred_idx] || gt_used[c.gt_idx]) continue;
    pred_used[c.pred_idx] = true;
    gt_used[c.gt_idx] = true;
    result.pairs.push_back({c.pred_idx, c.gt_idx, c.iou});
  }
  for (std::size_t j = 0; j < gt.size(); ++j)
    if (!gt_used[j]) result.unmatched_gt.push_back(j);
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!pred_used[i]) result.unmatched_pred.push_back(i);
  return result;
}

/// Sum of pair IoUs over the ground-truth count; unmatched GT contribute 0.
inline double mean_iou(const MatchResult& m, std::size_t n_gt) {
  if (n_gt == 0) throw EvalError("mean_iou: n_gt is 0", "");
  double sum = 0.0;
  for (const auto& p : m.pairs) sum += p.iou;
  return sum / static_cast<double>(n_gt);
}

/// Thresholded detection recall: a matched pair is a true positive iff its
/// mask IoU exceeds iou_thresh AND the cosine of the phrase embeddings
/// exceeds sim_thresh (both strict).
struct RecallResult {
  double recall = 0.0;
  std::size_t true_positives = 0;
};

inline RecallResult recall(const MatchResult& m, const std::vector<TargetEntry>& pred,
                           const std::vector<TargetEntry>& gt, const EmbeddingProvider& provider,
                           double iou_thresh = 0.5, double sim_thresh = 0.5) {
  RecallResult r;
  for (const auto& p : m.pairs) {
    if (!(p.iou > iou_thresh)) continue;
    double cos = cosine_similarity(provider.embed(pred[p.pred_idx].phrase),
                                   provider.embed(gt[p.gt_idx].phrase));
    if (cos > sim_thresh) ++r.true_positives;
  }
  std::size_t n_gt = m.n_gt();
  r.recall = n_gt == 0 ? 0.0 : static_cast<double>(r.true_positives) / static_cast<double>(n_gt);
  return r;
}

/// Mean phrase cosine (SS) and token-set IoU (SIoU) over all matched pairs,
/// normalized by the ground-truth count (unmatched GT contribute 0).
struct SemanticScores {
  double ss = 0.0;
  double siou = 0.0;
};

inline SemanticScores semantic_scores(const MatchResult& m, const std::vector<TargetEntry>& pred,
                                      const std::vector<TargetEntry>& gt,
                                      const EmbeddingProvider& provider) {
  SemanticScores s;
  std::size_t n_gt = m.n_gt();
  if (n_gt == 0) return s;
  for (const auto& p : m.pairs) {
    s.ss += cosine_similarity(provider.embed(pred[p.pred_idx].phrase),
                              provider.embed(gt[p.gt_idx].phrase));
    s.siou += token_set_iou(pred[p.pred_idx].phrase, gt[p.gt_idx].phrase);
  }
  s.ss /= static_cast<double>(n_gt);
  s.siou /= static_cast<double>(n_gt);
  return s;
}

/// SS/SIoU restricted to pairs whose IoU exceeds the threshold, averaged
/// over that subset only. An empty subset yields (0, 0) and sets the flag.
struct IouMatchedScores {
  double i_ss = 0.0;
  double i_siou = 0.0;
  bool empty_subset = false;
};

inline IouMatchedScores iou_matched_semantic_scores(const MatchResult& m,
                                                    const std::vector<TargetEntry>& pred,
                                                    const std::vector<TargetEntry>& gt,
                                                    const EmbeddingProvider& provider,
                                                    double iou_thresh = 0.5) {
  IouMatchedScores s;
  std::size_t n = 0;
  for (const auto& p : m.pairs) {
    if (!(p.iou > iou_thresh)) continue;
    s.i_ss += cosine_similarity(provider.embed(pred[p.pred_idx].phrase),
                                provider.embed(gt[p.gt_idx].phrase));
    s.i_siou += token_set_iou(pred[p.pred_idx].phrase, gt[p.gt_idx].phrase);
    ++n;
  }
  if (n == 0) {
    s.empty_subset = true;
    return s;
  }
  s.i_ss /= static_cast<double>(n);
  s.i_siou /= static_cast<double>(n);
  return s;
}

/// Evaluation knobs shared by the library and the CLI.
struct EvalConfig {
  double iou_threshold = 0.5;
  double sim_threshold = 0.5;
  MeteorParams meteor;
  unsigned jobs = 1;  // worker threads for evaluate_dataset
};

/// Per-sample metric values (per_sample rows of the report).
struct SampleMetrics {
  std::string sample_id;
  double miou = 0.0;
  double recall = 0.0;
  double ss = 0.0;
  double siou = 0.0;
  double i_ss = 0.0;
  double i_siou = 0.0;
  double meteor = 0.0;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  std::size_t true_positives = 0;
  bool no_iou_matches = false;
};

inline SampleMetrics evaluate_sample(const EvalSample& sample, const EmbeddingProvider& provider,
                                     const EvalConfig& config = {}) {
  sample.validate();

  // Embed each distinct phrase once per sample.
  std::map<std::string, std::vector<double>> cache;
  struct CachedProvider : EmbeddingProvider {
    const EmbeddingProvider& inner;
    std::map<std::string, std::vector<double>>& cache;
    CachedProvider(const EmbeddingProvider& p, std::map<std::string, std::vector<double>>& c)
        : inner(p), cache(c) {}
    std::size_t dimension() const override { return inner.dimension(); }
    std::string name() const override { return inner.name(); }
    std::vector<double> embed(const std::string& text) const override {
      auto it = cache.find(text);
      if (it != cache.end()) return it->second;
      auto vec = inner.embed(text);
      cache.emplace(text, vec);
      return vec;
    }
  } cached(provider, cache);

  MatchResult match = match_masks(sample.pred, sample.gt);
  SampleMetrics out;
  out.sample_id = sample.sample_id;
  out.n_gt = sample.gt.size();
  out.n_pred = sample.pred.size();
  out.miou = mean_iou(match, out.n_gt);
  RecallResult rec = recall(match, sample.pred, sample.gt, cached, config.iou_threshold,
                            config.sim_threshold);
  out.recall = rec.recall;
  out.true_positives = rec.true_positives;
  SemanticScores sem = semantic_scores(match, sample.pred, sample.gt, cached);
  out.ss = sem.ss;
  out.siou = sem.siou;
  IouMatchedScores im =
      iou_matched_semantic_scores(match, sample.pred, sample.gt, cached, config.iou_threshold);
  out.i_ss = im.i_ss;
  out.i_siou = im.i_siou;
  out.no_iou_matches = im.empty_subset;
  out.meteor = meteor_score(sample.pred_sentence, sample.gt_sentence, config.meteor);
  return out;
}

/// Aggregated dataset-level report. miou/ss/siou/i_ss/i_siou/meteor are
/// macro-averages over samples; recall is micro-averaged over GT targets.
struct MetricReport {
  double miou = 0.0;
  double recall = 0.0;
  double ss = 0.0;
  double siou = 0.0;
  double i_ss = 0.0;
  double i_siou = 0.0;
  double meteor = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_gt = 0;
  std::uint64_t n_pred = 0;
  std::uint64_t n_true_positive = 0;
  std::uint64_t n_invalid_skipped = 0;
};

/// Order-preserving aggregation; feed SampleMetrics in input order so the
/// floating-point sums (and thus reports) are independent of parallelism.
class MetricAccumulator {
 public:
  void add(const SampleMetrics& s) {
    samples_.push_back(s);
    sum_miou_ += s.miou;
    sum_ss_ += s.ss;
    sum_siou_ += s.siou;
    sum_i_ss_ += s.i_ss;
    sum_i_siou_ += s.i_siou;
    sum_meteor_ += s.meteor;
    n_gt_ += s.n_gt;
    n_pred_ += s.n_pred;
    n_tp_ += s.true_positives;
  }

  void count_invalid() { ++n_invalid_; }

  const std::vector<SampleMetrics>& per_sample() const { return samples_; }

  MetricReport report() const {
    MetricReport r;
    r.n_samples = samples_.size();
    r.n_gt = n_gt_;
    r.n_pred = n_pred_;
    r.n_true_positive = n_tp_;
    r.n_invalid_skipped = n_invalid_;
    if (!samples_.empty()) {
      double n = static_cast<double>(samples_.size());
      r.miou = sum_miou_ / n;
      r.ss = sum_ss_ / n;
      r.siou = sum_siou_ / n;
      r.i_ss = sum_i_ss_ / n;
      r.i_siou = sum_i_siou_ / n;
      r.meteor = sum_meteor_ / n;
    }
    r.recall = n_gt_ == 0 ? 0.0 : static_cast<double>(n_tp_) / static_cast<double>(n_gt_);
    return r;
  }

 private:
  std::vector<SampleMetrics> samples_;
  double sum_miou_ = 0.0, sum_ss_ = 0.0, sum_siou_ = 0.0;
  double sum_i_ss_ = 0.0, sum_i_siou_ = 0.0, sum_meteor_ = 0.0;
  std::uint64_t n_gt_ = 0, n_pred_ = 0, n_tp_ = 0, n_invalid_ = 0;
};

/// Per-sample outcome of a parallel block: metrics or an error message.
struct SampleOutcome {
  bool ok = false;
  SampleMetrics metrics;
  std::string sample_id;
  std::string error;
};

/// Evaluate a block of samples with `jobs` workers. Results land at the
/// sample's input position, so downstream aggregation order — and therefore
/// the report — does not depend on the worker count.
inline std::vector<SampleOutcome> evaluate_block(const std::vector<EvalSample>& block,
                                                 const EmbeddingProvider& provider,
                                                 const EvalConfig& config) {
  std::vector<SampleOutcome> outcomes(block.size());
  unsigned jobs = std::max(1u, config.jobs);
  auto run = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < block.size(); i += step) {
      SampleOutcome& out = outcomes[i];
      out.sample_id = block[i].sample_id;
      try {
        out.metrics = evaluate_sample(block[i], provider, config);
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };
  if (jobs == 1 || block.size() <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> workers;
    unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(block.size()));
    workers.reserve(n);
    for (unsigned w = 0; w < n; ++w) workers.emplace_back(run, w, n);
    for (auto& t : workers) t.join();
  }
  return outcomes;
}

/// Evaluate a full dataset held in memory. Invalid samples abort with an
/// EvalError naming the sample unless skip_invalid is set, in which case
/// they are counted and excluded.
inline MetricReport evaluate_dataset(const std::vector<EvalSample>& samples,
                                     const EmbeddingProvider& provider,
                                     const EvalConfig& config = {}, bool skip_invalid = false,
                                     std::vector<SampleMetrics>* per_sample_out = nullptr) {
  MetricAccumulator acc;
  auto outcomes = evaluate_block(samples, provider, config);
  for (const auto& out : outcomes) {
    if (out.ok) {
      acc.add(out.metrics);
    } else if (skip_invalid) {
      acc.count_invalid();
    } else {
      throw EvalError(out.error, out.sample_id);
    }
  }
  if (per_sample_out) *per_sample_out = acc.per_sample();
  return acc.report();
}

}  // namespace groundkit
