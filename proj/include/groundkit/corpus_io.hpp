#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "groundkit/dataset.hpp"
#include "groundkit/detail/bytes.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/mask.hpp"
#include "groundkit/metrics.hpp"

namespace groundkit {

using nlohmann::json;

namespace detail {
inline const json& require_field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field \"" + key + "\"");
  return *it;
}

/// Feature vectors travel as base64-packed little-endian f32.
inline std::string encode_feature(const std::vector<float>& feature) {
  std::vector<unsigned char> bytes(feature.size() * 4);
  for (std::size_t i = 0; i < feature.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &feature[i], 4);
    bytes[i * 4 + 0] = static_cast<unsigned char>(bits & 0xFF);
    bytes[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
    bytes[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
    bytes[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
  }
  return base64_encode(bytes.data(), bytes.size());
}

inline std::vector<float> decode_feature(const std::string& blob, std::size_t dim,
                                         const std::string& where) {
  std::vector<unsigned char> bytes = base64_decode(blob);
  if (bytes.size() != dim * 4)
    throw SchemaError(where + ": feature blob holds " + std::to_string(bytes.size() / 4) +
                      " floats, feature_dim says " + std::to_string(dim));
  std::vector<float> feature(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(bytes[i * 4 + 0]) |
                         (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                         (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                         (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
    std::memcpy(&feature[i], &bits, 4);
  }
  return feature;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// RLE masks: {"size":[H,W],"counts":[c0,c1,...]}

inline json mask_to_json(const RleMask& mask) {
  json j;
  j["size"] = {mask.height, mask.width};
  j["counts"] = mask.counts;
  return j;
}

inline RleMask mask_from_json(const json& j, const std::string& where) {
  const json& size = detail::require_field(j, "size", where);
  if (!size.is_array() || size.size() != 2)
    throw SchemaError(where + ": mask size must be [H, W]");
  RleMask mask;
  mask.height = size[0].get<std::size_t>();
  mask.width = size[1].get<std::size_t>();
  const json& counts = detail::require_field(j, "counts", where);
  if (!counts.is_array()) throw SchemaError(where + ": mask counts must be an array");
  mask.counts.reserve(counts.size());
  for (const auto& c : counts) {
    if (!c.is_number_unsigned())
      throw SchemaError(where + ": mask counts must be unsigned integers");
    mask.counts.push_back(c.get<std::uint64_t>());
  }
  try {
    mask.validate();
  } catch (const ShapeError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Corpus records

inline json image_record_to_json(const ImageRecord& rec) {
  json j;
  j["image_id"] = rec.image_id;
  j["height"] = rec.height;
  j["width"] = rec.width;
  j["feature_dim"] = rec.feature.size();
  j["feature"] = detail::encode_feature(rec.feature);
  json objects = json::array();
  for (const auto& obj : rec.objects) {
    json o;
    o["name"] = obj.name;
    o["object_id"] = obj.object_id;
    o["bbox"] = {obj.bbox.x1, obj.bbox.y1, obj.bbox.x2, obj.bbox.y2};
    if (obj.mask_ref) o["mask_ref"] = *obj.mask_ref;
    json parts = json::array();
    for (const auto& part : obj.parts) {
      json p;
      p["name"] = part.name;
      p["part_id"] = part.part_id;
      p["bbox"] = {part.bbox.x1, part.bbox.y1, part.bbox.x2, part.bbox.y2};
      if (part.mask_ref) p["mask_ref"] = *part.mask_ref;
      parts.push_back(std::move(p));
    }
    if (!parts.empty()) o["parts"] = std::move(parts);
    objects.push_back(std::move(o));
  }
  j["objects"] = std::move(objects);
  return j;
}

inline BBox bbox_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw SchemaError(where + ": bbox must be [x1, y1, x2, y2]");
  return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline ImageRecord image_record_from_json(const json& j, const std::string& where) {
  ImageRecord rec;
  rec.image_id = detail::require_field(j, "image_id", where).get<std::string>();
  rec.height = detail::require_field(j, "height", where).get<std::size_t>();
  rec.width = detail::require_field(j, "width", where).get<std::size_t>();
  std::size_t dim = detail::require_field(j, "feature_dim", where).get<std::size_t>();
  rec.feature = detail::decode_feature(
      detail::require_field(j, "feature", where).get<std::string>(), dim, where);
  if (auto it = j.find("objects"); it != j.end()) {
    for (const auto& o : *it) {
      ObjectRecord obj;
      obj.name = detail::require_field(o, "name", where).get<std::string>();
      obj.object_id = detail::require_field(o, "object_id", where).get<unsigned>();
      obj.bbox = bbox_from_json(detail::require_field(o, "bbox", where), where);
      if (auto m = o.find("mask_ref"); m != o.end()) obj.mask_ref = m->get<std::string>();
      if (auto ps = o.find("parts"); ps != o.end()) {
        for (const auto& p : *ps) {
          PartRecord part;
          part.name = detail::require_field(p, "name", where).get<std::string>();
          part.part_id = detail::require_field(p, "part_id", where).get<unsigned>();
          part.bbox = bbox_from_json(detail::require_field(p, "bbox", where), where);
          if (auto m = p.find("mask_ref"); m != p.end()) part.mask_ref = m->get<std::string>();
          obj.parts.push_back(std::move(part));
        }
      }
      rec.objects.push_back(std::move(obj));
    }
  }
  return rec;
}

/// Read a JSONL file line by line, handing each parsed object plus a
/// "path:line" location string to the callback. Blank lines are skipped.
template <typename Fn>
inline void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    fn(j, where);
  }
}

inline CorpusIndex load_corpus(const std::string& path) {
  std::vector<ImageRecord> records;
  for_each_jsonl(path, [&](const json& j, const std::string& where) {
    records.push_back(image_record_from_json(j, where));
  });
  return CorpusIndex(std::move(records));
}

inline CompatibilityTable load_compatibility(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (!j.is_array()) throw SchemaError(path + ": compatibility table must be a JSON array");
  CompatibilityTable table;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw SchemaError(path + ": each compatibility entry must be [name_a, name_b]");
    table.add_pair(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Sample sets and QA pairs

inline json sample_set_to_json(const SampleSet& set) {
  json j;
  j["image_ids"] = set.image_ids;
  j["strategy"] = strategy_name(set.strategy);
  j["anchor_id"] = set.anchor_id;
  return j;
}

inline SampleSet sample_set_from_json(const json& j, const std::string& where) {
  SampleSet set;
  for (const auto& id : detail::require_field(j, "image_ids", where))
    set.image_ids.push_back(id.get<std::string>());
  set.strategy = strategy_from_name(detail::require_field(j, "strategy", where).get<std::string>());
  set.anchor_id = detail::require_field(j, "anchor_id", where).get<std::string>();
  try {
    set.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return set;
}

inline json qa_pair_to_json(const QAPair& pair) {
  json j;
  j["question"] = pair.question;
  j["answer"] = pair.answer;
  j["category"] = category_name(pair.category);
  j["sample"] = sample_set_to_json(pair.sample);
  return j;
}

inline QAPair qa_pair_from_json(const json& j, const std::string& where) {
  QAPair pair;
  pair.question = detail::require_field(j, "question", where).get<std::string>();
  pair.answer = detail::require_field(j, "answer", where).get<std::string>();
  pair.category =
      category_from_name(detail::require_field(j, "category", where).get<std::string>());
  pair.sample = sample_set_from_json(detail::require_field(j, "sample", where), where);
  return pair;
}

inline std::vector<QAPair> load_qa_pairs(const std::string& path) {
  std::vector<QAPair> pairs;
  for_each_jsonl(path, [&](const json& j, const std::string& where) {
    pairs.push_back(qa_pair_from_json(j, where));
  });
  return pairs;
}

// ---------------------------------------------------------------------------
// Evaluation samples. One JSONL record may carry ground-truth fields,
// prediction fields, or both; the two roles are read separately so one file
// can serve as either side of the join.

struct SampleRecord {
  std::string sample_id;
  std::vector<std::pair<std::size_t, std::size_t>> images;
  std::string question;
  std::optional<std::vector<TargetEntry>> gt;
  std::optional<std::vector<TargetEntry>> pred;
  std::optional<std::string> gt_sentence;
  std::optional<std::string> pred_sentence;
};

inline std::vector<TargetEntry> targets_from_json(const json& arr, const std::string& where) {
  std::vector<TargetEntry> targets;
  if (!arr.is_array()) throw SchemaError(where + ": target list must be an array");
  for (const auto& t : arr) {
    TargetEntry entry;
    entry.image_index = detail::require_field(t, "image", where).get<std::size_t>();
    entry.phrase = detail::require_field(t, "phrase", where).get<std::string>();
    entry.mask = mask_from_json(detail::require_field(t, "mask", where), where);
    targets.push_back(std::move(entry));
  }
  return targets;
}

inline json targets_to_json(const std::vector<TargetEntry>& targets) {
  json arr = json::array();
  for (const auto& t : targets) {
    json j;
    j["image"] = t.image_index;
    j["phrase"] = t.phrase;
    j["mask"] = mask_to_json(t.mask);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline SampleRecord sample_record_from_json(const json& j, const std::string& where) {
  SampleRecord rec;
  rec.sample_id = detail::require_field(j, "sample_id", where).get<std::string>();
  if (auto it = j.find("images"); it != j.end()) {
    for (const auto& img : *it)
      rec.images.emplace_back(detail::require_field(img, "height", where).get<std::size_t>(),
                              detail::require_field(img, "width", where).get<std::size_t>());
  }
  if (auto it = j.find("question"); it != j.end()) rec.question = it->get<std::string>();
  if (auto it = j.find("gt"); it != j.end()) rec.gt = targets_from_json(*it, where);
  if (auto it = j.find("pred"); it != j.end()) rec.pred = targets_from_json(*it, where);
  if (auto it = j.find("gt_sentence"); it != j.end()) rec.gt_sentence = it->get<std::string>();
  if (auto it = j.find("pred_sentence"); it != j.end())
    rec.pred_sentence = it->get<std::string>();
  return rec;
}

inline json eval_sample_to_json(const EvalSample& s) {
  json j;
  j["sample_id"] = s.sample_id;
  json images = json::array();
  for (const auto& [h, w] : s.images) images.push_back({{"height", h}, {"width", w}});
  j["images"] = std::move(images);
  j["question"] = s.question;
  j["gt"] = targets_to_json(s.gt);
  j["pred"] = targets_to_json(s.pred);
  j["gt_sentence"] = s.gt_sentence;
  j["pred_sentence"] = s.pred_sentence;
  return j;
}

/// Join one ground-truth record with one prediction record. The GT side must
/// carry images and gt targets. The prediction side prefers its "pred"
/// fields and falls back to its "gt" fields, so a ground-truth file passed
/// as --pred scores as a perfect prediction.
inline EvalSample combine_records(const SampleRecord& gt_rec, const SampleRecord& pred_rec) {
  if (gt_rec.sample_id != pred_rec.sample_id)
    throw SchemaError("sample_id mismatch: gt \"" + gt_rec.sample_id + "\" vs pred \"" +
                      pred_rec.sample_id + "\"");
  EvalSample sample;
  sample.sample_id = gt_rec.sample_id;
  sample.images = gt_rec.images;
  sample.question = gt_rec.question;
  if (!gt_rec.gt)
    throw SchemaError("sample " + gt_rec.sample_id + ": ground-truth record lacks \"gt\"");
  sample.gt = *gt_rec.gt;
  sample.gt_sentence = gt_rec.gt_sentence.value_or("");
  if (pred_rec.pred)
    sample.pred = *pred_rec.pred;
  else if (pred_rec.gt)
    sample.pred = *pred_rec.gt;
  else
    throw SchemaError("sample " + pred_rec.sample_id +
                      ": prediction record lacks both \"pred\" and \"gt\"");
  if (pred_rec.pred_sentence)
    sample.pred_sentence = *pred_rec.pred_sentence;
  else
    sample.pred_sentence = pred_rec.gt_sentence.value_or("");
  return sample;
}

inline std::vector<EvalSample> load_eval_samples(const std::string& gt_path,
                                                 const std::string& pred_path) {
  std::vector<SampleRecord> gt_records, pred_records;
  for_each_jsonl(gt_path, [&](const json& j, const std::string& where) {
    gt_records.push_back(sample_record_from_json(j, where));
  });
  for_each_jsonl(pred_path, [&](const json& j, const std::string& where) {
    pred_records.push_back(sample_record_from_json(j, where));
  });
  if (gt_records.size() != pred_records.size())
    throw SchemaError("gt file has " + std::to_string(gt_records.size()) +
                      " samples but pred file has " + std::to_string(pred_records.size()));
  std::vector<EvalSample> samples;
  samples.reserve(gt_records.size());
  for (std::size_t i = 0; i < gt_records.size(); ++i)
    samples.push_back(combine_records(gt_records[i], pred_records[i]));
  return samples;
}

}  // namespace groundkit
