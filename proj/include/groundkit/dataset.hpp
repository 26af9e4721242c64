#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "groundkit/errors.hpp"
#include "groundkit/identifier.hpp"
#include "groundkit/rng.hpp"

namespace groundkit {

/// Axis-aligned box in pixel coordinates, corners inclusive.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

struct PartRecord {
  std::string name;
  unsigned part_id = 0;
  BBox bbox;
  std::optional<std::string> mask_ref;
};

struct ObjectRecord {
  std::string name;
  unsigned object_id = 0;
  BBox bbox;
  std::optional<std::string> mask_ref;
  std::vector<PartRecord> parts;
};

/// One annotated corpus image: metadata, an opaque feature vector, and the
/// object/part annotation tables.
struct ImageRecord {
  std::string image_id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> feature;
  std::vector<ObjectRecord> objects;

  void validate() const {
    if (image_id.empty()) throw SchemaError("image record without image_id");
    if (height == 0 || width == 0)
      throw SchemaError("image " + image_id + " has zero dimensions");
    auto check_box = [&](const BBox& b, const std::string& what) {
      if (b.x1 > b.x2 || b.y1 > b.y2 || b.x1 < 0 || b.y1 < 0 ||
          b.x2 > static_cast<double>(width) || b.y2 > static_cast<double>(height))
        throw SchemaError("image " + image_id + ": bbox of " + what + " out of bounds");
    };
    std::set<unsigned> object_ids;
    for (const auto& obj : objects) {
      if (!object_ids.insert(obj.object_id).second)
        throw SchemaError("image " + image_id + ": duplicate object_id " +
                          std::to_string(obj.object_id));
      check_box(obj.bbox, obj.name);
      std::set<unsigned> part_ids;
      for (const auto& part : obj.parts) {
        if (!part_ids.insert(part.part_id).second)
          throw SchemaError("image " + image_id + ": duplicate part_id " +
                            std::to_string(part.part_id) + " under object " +
                            std::to_string(obj.object_id));
        check_box(part.bbox, part.name);
      }
    }
  }

  /// Annotation-source label: the image_id prefix before the first '/'.
  std::string source() const {
    std::size_t slash = image_id.find('/');
    return slash == std::string::npos ? std::string("unknown") : image_id.substr(0, slash);
  }

  std::vector<ObjectAnnotation> annotation_table() const {
    std::vector<ObjectAnnotation> table;
    table.reserve(objects.size());
    for (const auto& obj : objects) {
      ObjectAnnotation a;
      a.name = obj.name;
      a.object_id = obj.object_id;
      a.has_mask = obj.mask_ref.has_value();
      for (const auto& part : obj.parts)
        a.parts.push_back({part.name, part.part_id, part.mask_ref.has_value()});
      table.push_back(std::move(a));
    }
    return table;
  }
};

/// Owned corpus with O(1) lookup by image id.
class CorpusIndex {
 public:
  explicit CorpusIndex(std::vector<ImageRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      records_[i].validate();
      if (!by_id_.emplace(records_[i].image_id, i).second)
        throw SchemaError("duplicate image_id in corpus: " + records_[i].image_id);
    }
  }

  const ImageRecord* find(const std::string& image_id) const {
    auto it = by_id_.find(image_id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
  }

  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// A 2- or 3-image group emitted by the sampler.
struct SampleSet {
  enum class Strategy { nearest_neighbor, object_category };

  std::vector<std::string> image_ids;
  Strategy strategy = Strategy::nearest_neighbor;
  std::string anchor_id;

  void validate() const {
    if (image_ids.size() < 2 || image_ids.size() > 3)
      throw SchemaError("sample set must hold 2 or 3 images");
    std::set<std::string> distinct(image_ids.begin(), image_ids.end());
    if (distinct.size() != image_ids.size()) throw SchemaError("sample set repeats an image");
    if (distinct.count(anchor_id) == 0) throw SchemaError("sample set omits its anchor");
  }
};

inline std::string_view strategy_name(SampleSet::Strategy s) {
  return s == SampleSet::Strategy::nearest_neighbor ? "nearest-neighbor" : "object-category";
}

inline SampleSet::Strategy strategy_from_name(std::string_view name) {
  if (name == "nearest-neighbor") return SampleSet::Strategy::nearest_neighbor;
  if (name == "object-category") return SampleSet::Strategy::object_category;
  throw SchemaError("unknown sampling strategy: " + std::string(name));
}

/// A question/answer pair over a sample set; the answer carries identifier
/// tokens which resolve to grounding targets.
struct QAPair {
  enum class Category { functional, spatial, numerical, open_ended };

  std::string question;
  std::string answer;
  Category category = Category::open_ended;
  std::vector<ResolvedTarget> resolved_targets;  // populated by resolution/filtering
  SampleSet sample;
};

inline std::string_view category_name(QAPair::Category c) {
  switch (c) {
    case QAPair::Category::functional: return "functional";
    case QAPair::Category::spatial: return "spatial";
    case QAPair::Category::numerical: return "numerical";
    case QAPair::Category::open_ended: return "open-ended";
  }
  return "open-ended";
}

inline QAPair::Category category_from_name(std::string_view name) {
  if (name == "functional") return QAPair::Category::functional;
  if (name == "spatial") return QAPair::Category::spatial;
  if (name == "numerical") return QAPair::Category::numerical;
  if (name == "open-ended") return QAPair::Category::open_ended;
  throw SchemaError("unknown question category: " + std::string(name));
}

/// 1 - cos(f1, f2); 0 for identical directions, 2 for antipodal ones.
inline double cosine_distance(const std::vector<float>& f1, const std::vector<float>& f2) {
  if (f1.size() != f2.size()) throw ShapeError("cosine_distance: dimension mismatch");
  if (f1.empty()) throw ShapeError("cosine_distance: empty vectors");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    dot += static_cast<double>(f1[i]) * static_cast<double>(f2[i]);
    n1 += static_cast<double>(f1[i]) * static_cast<double>(f1[i]);
    n2 += static_cast<double>(f2[i]) * static_cast<double>(f2[i]);
  }
  if (n1 == 0.0 || n2 == 0.0) throw ShapeError("cosine_distance: zero-norm feature vector");
  return 1.0 - dot / (std::sqrt(n1) * std::sqrt(n2));
}

/// The k nearest corpus images to the anchor by cosine distance, ascending,
/// ties broken by image_id; the anchor itself is excluded.
inline std::vector<std::string> knn_query(const ImageRecord& anchor, const CorpusIndex& corpus,
                                          std::size_t k) {
  if (corpus.size() <= k)
    throw SchemaError("knn_query: corpus holds " + std::to_string(corpus.size()) +
                      " images, need more than k=" + std::to_string(k));
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(corpus.size());
  for (const auto& rec : corpus.records()) {
    if (rec.image_id == anchor.image_id) continue;
    ranked.emplace_back(cosine_distance(anchor.feature, rec.feature), &rec.image_id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k && i < ranked.size(); ++i) out.push_back(*ranked[i].second);
  return out;
}

/// Symmetric object-name compatibility: two names are compatible when equal
/// or listed as a pair (closure applied on insert).
class CompatibilityTable {
 public:
  void add_pair(const std::string& a, const std::string& b) {
    pairs_.insert(key(a, b));
    pairs_.insert(key(b, a));
  }

  bool compatible(const std::string& a, const std::string& b) const {
    return a == b || pairs_.count(key(a, b)) > 0;
  }

  std::size_t pair_count() const { return pairs_.size(); }

 private:
  static std::string key(const std::string& a, const std::string& b) {
    return a + '\x1f' + b;
  }
  std::unordered_set<std::string> pairs_;
};

/// Sampler knobs. set_size 0 draws 2 or 3 from the per-anchor stream;
/// a fixed 2 or 3 pins it (the anchor counts toward the size).
struct SamplingConfig {
  SampleSet::Strategy strategy = SampleSet::Strategy::nearest_neighbor;
  std::size_t k = 20;         // nearest-neighbor pool size
  std::size_t k2 = 5;         // category-compatible pool size
  std::size_t set_size = 0;   // 0 = draw in {2,3}
  std::uint64_t seed = 0;
  const CompatibilityTable* compatibility = nullptr;  // required for category strategy
};

/// Draw one image set around the anchor. Deterministic in (seed, anchor id):
/// each anchor gets a derived RNG stream, so corpus iteration order does not
/// matter. Returns an empty list when the candidate pool is smaller than the
/// drawn companion count (not an error).
inline std::vector<SampleSet> sample_image_sets(const ImageRecord& anchor,
                                                const CorpusIndex& corpus,
                                                const SamplingConfig& config) {
  if (config.set_size != 0 && (config.set_size < 2 || config.set_size > 3))
    throw SchemaError("sample set size must be 2 or 3");
  SplitMix64 rng = derived_rng(config.seed, anchor.image_id);
  std::size_t total = config.set_size != 0
                          ? config.set_size
                          : 2 + static_cast<std::size_t>(rng.next_below(2));
  std::size_t companions = total - 1;

  std::vector<std::string> pool;
  if (config.strategy == SampleSet::Strategy::nearest_neighbor) {
    std::size_t k = std::min(config.k, corpus.size() > 0 ? corpus.size() - 1 : 0);
    if (k == 0) return {};
    pool = knn_query(anchor, corpus, k);
  } else {
    if (!config.compatibility)
      throw SchemaError("category sampling requires a compatibility table");
    std::set<std::string> anchor_names;
    for (const auto& obj : anchor.objects) anchor_names.insert(obj.name);
    std::vector<std::pair<double, const std::string*>> ranked;
    for (const auto& rec : corpus.records()) {
      if (rec.image_id == anchor.image_id) continue;
      bool ok = false;
      for (const auto& obj : rec.objects) {
        for (const auto& name : anchor_names)
          if (config.compatibility->compatible(name, obj.name)) { ok = true; break; }
        if (ok) break;
      }
      if (!ok) continue;
      ranked.emplace_back(cosine_distance(anchor.feature, rec.feature), &rec.image_id);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return *a.second < *b.second;
    });
    for (std::size_t i = 0; i < config.k2 && i < ranked.size(); ++i)
      pool.push_back(*ranked[i].second);
  }

  if (pool.size() < companions) return {};
  // Partial Fisher-Yates: the first `companions` slots become the draw.
  for (std::size_t i = 0; i < companions; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  SampleSet set;
  set.strategy = config.strategy;
  set.anchor_id = anchor.image_id;
  set.image_ids.push_back(anchor.image_id);
  set.image_ids.insert(set.image_ids.end(), pool.begin(),
                       pool.begin() + static_cast<std::ptrdiff_t>(companions));
  set.validate();
  return {set};
}

/// Filtering outcome ledger; a pair is charged to the first rule it violates.
struct FilterReport {
  std::uint64_t kept = 0;
  std::map<std::string, std::uint64_t> discarded_by_rule;
  std::uint64_t total = 0;

  std::uint64_t discarded() const {
    std::uint64_t sum = 0;
    for (const auto& [rule, n] : discarded_by_rule) sum += n;
    return sum;
  }
};

struct FilterOptions {
  std::size_t max_masks = 16;
  /// Rule (a): answers with fewer than this many non-identifier words are
  /// treated as bare enumerations.
  std::size_t min_prose_words = 3;
};

namespace detail {
/// Words of an answer that are not identifier-shaped tokens.
inline std::size_t prose_word_count(std::string_view answer) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < answer.size()) {
    unsigned char c = static_cast<unsigned char>(answer[pos]);
    if (!std::isalnum(c) && c != '_') {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < answer.size()) {
      unsigned char e = static_cast<unsigned char>(answer[end]);
      if (!std::isalnum(e) && e != '_') break;
      ++end;
    }
    if (!identifier_shaped(answer.substr(pos, end - pos))) ++count;
    pos = end;
  }
  return count;
}

/// Bracketed 4-integer pattern, e.g. "[12, 30, 44, 80]".
inline bool contains_bbox_pattern(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos;
       open = text.find('[', open + 1)) {
    std::size_t pos = open + 1;
    std::size_t numbers = 0;
    bool ok = true;
    while (ok) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      std::size_t digits = pos;
      while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits])))
        ++digits;
      if (digits == pos) { ok = false; break; }
      ++numbers;
      pos = digits;
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        continue;
      }
      break;
    }
    if (ok && numbers == 4 && pos < text.size() && text[pos] == ']') return true;
  }
  return false;
}
}  // namespace detail

/// Apply the discard cascade in rule order; the first violated rule is
/// charged. Kept pairs come back with resolved_targets populated.
///   (a) bare enumeration: fewer than min_prose_words non-identifier words;
///   (b) bbox coordinates in the question;
///   (c) resolved references do not cover every image of the set;
///   (d) fewer than 2 distinct images contribute a masked target;
///   (e) unresolvable identifier tokens (including missing annotations);
///   cap: more than max_masks resolved targets.
inline std::pair<std::vector<QAPair>, FilterReport> filter_qa(const std::vector<QAPair>& pairs,
                                                              const CorpusIndex& corpus,
                                                              const FilterOptions& options = {}) {
  std::vector<QAPair> kept;
  FilterReport report;
  report.total = pairs.size();
  auto charge = [&report](const char* rule) { ++report.discarded_by_rule[rule]; };

  for (const QAPair& pair : pairs) {
    if (detail::prose_word_count(pair.answer) < options.min_prose_words) {
      charge("a");
      continue;
    }
    if (detail::contains_bbox_pattern(pair.question)) {
      charge("b");
      continue;
    }

    AnnotationTables tables;
    tables.reserve(pair.sample.image_ids.size());
    bool missing_image = false;
    for (const auto& id : pair.sample.image_ids) {
      const ImageRecord* rec = corpus.find(id);
      if (!rec) {
        missing_image = true;
        tables.emplace_back();  // empty table: its references become unresolved
      } else {
        tables.push_back(rec->annotation_table());
      }
    }
    ResolveResult resolved = scan_references(pair.answer, tables);

    std::set<std::size_t> referenced_images, masked_images;
    for (const auto& target : resolved.targets) {
      referenced_images.insert(target.image_index);
      if (target.has_mask) masked_images.insert(target.image_index);
    }
    if (referenced_images.size() != pair.sample.image_ids.size()) {
      charge("c");
      continue;
    }
    if (masked_images.size() < 2) {
      charge("d");
      continue;
    }
    if (!resolved.unresolved_tokens.empty() || missing_image) {
      charge("e");
      continue;
    }
    if (resolved.targets.size() > options.max_masks) {
      charge("mask_cap");
      continue;
    }
    QAPair out = pair;
    out.resolved_targets = std::move(resolved.targets);
    kept.push_back(std::move(out));
  }
  report.kept = kept.size();
  return {std::move(kept), report};
}

/// Dataset composition summary over resolved QA pairs.
struct DatasetStats {
  std::uint64_t n_pairs = 0;
  double mean_targets = 0.0;
  std::uint64_t max_targets = 0;
  std::uint64_t n_unique_object_names = 0;
  std::uint64_t n_unique_part_names = 0;
  std::map<std::string, std::uint64_t> category_hist;        // question type
  std::map<std::string, std::uint64_t> source_hist;          // annotation source per pair
  std::map<std::uint64_t, std::uint64_t> unique_objects_hist;  // distinct object names per pair
  std::map<std::uint64_t, std::uint64_t> unique_parts_hist;    // distinct part names per pair
  std::map<std::uint64_t, std::uint64_t> target_count_hist;    // resolved targets per pair
};

/// Tally the five composition levels: annotation source (image_id prefix),
/// question type, per-pair unique object/part names, and target counts.
/// Pairs must carry resolved_targets (run them through filter_qa or
/// scan_references first).
inline DatasetStats dataset_stats(const std::vector<QAPair>& pairs) {
  if (pairs.empty()) throw SchemaError("dataset_stats: no pairs");
  DatasetStats stats;
  stats.n_pairs = pairs.size();
  std::set<std::string> global_objects, global_parts;
  std::uint64_t total_targets = 0;

  for (const QAPair& pair : pairs) {
    std::uint64_t targets = pair.resolved_targets.size();
    total_targets += targets;
    stats.max_targets = std::max(stats.max_targets, targets);
    ++stats.target_count_hist[targets];
    ++stats.category_hist[std::string(category_name(pair.category))];

    std::set<std::string> pair_objects, pair_parts, pair_sources;
    for (const auto& target : pair.resolved_targets) {
      const std::string& name =
          target.annotation_name.empty() ? target.name : target.annotation_name;
      if (target.part_id) {
        pair_parts.insert(name);
        global_parts.insert(name);
      } else {
        pair_objects.insert(name);
        global_objects.insert(name);
      }
    }
    for (const auto& id : pair.sample.image_ids) {
      std::size_t slash = id.find('/');
      pair_sources.insert(slash == std::string::npos ? std::string("unknown")
                                                     : id.substr(0, slash));
    }
    for (const auto& src : pair_sources) ++stats.source_hist[src];
    ++stats.unique_objects_hist[pair_objects.size()];
    ++stats.unique_parts_hist[pair_parts.size()];
  }

  stats.mean_targets = static_cast<double>(total_targets) / static_cast<double>(pairs.size());
  stats.n_unique_object_names = global_objects.size();
  stats.n_unique_part_names = global_parts.size();
  return stats;
}

}  // namespace groundkit
