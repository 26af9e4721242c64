#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "groundkit/dataset.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/metrics.hpp"

namespace groundkit {

enum class ReportFormat { json, csv, md };

inline ReportFormat report_format_from_name(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "md") return ReportFormat::md;
  throw SchemaError("unknown report format: " + name + " (expected json, csv, or md)");
}

namespace detail {
/// Render-time rounding for the human-readable formats; the JSON report
/// keeps full precision.
inline std::string round4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}
}  // namespace detail

inline nlohmann::json sample_metrics_to_json(const SampleMetrics& s) {
  nlohmann::json j;
  j["sample_id"] = s.sample_id;
  j["miou"] = s.miou;
  j["recall"] = s.recall;
  j["ss"] = s.ss;
  j["siou"] = s.siou;
  j["i_ss"] = s.i_ss;
  j["i_siou"] = s.i_siou;
  j["meteor"] = s.meteor;
  j["n_gt"] = s.n_gt;
  j["n_pred"] = s.n_pred;
  j["n_true_positive"] = s.true_positives;
  j["no_iou_matches"] = s.no_iou_matches;
  return j;
}

inline nlohmann::json report_to_json(const MetricReport& r, const std::string& provider_label,
                                     const std::vector<SampleMetrics>* per_sample = nullptr) {
  nlohmann::json j;
  j["miou"] = r.miou;
  j["recall"] = r.recall;
  j["ss"] = r.ss;
  j["siou"] = r.siou;
  j["i_ss"] = r.i_ss;
  j["i_siou"] = r.i_siou;
  j["meteor"] = r.meteor;
  j["n_samples"] = r.n_samples;
  j["n_gt"] = r.n_gt;
  j["n_pred"] = r.n_pred;
  j["n_true_positive"] = r.n_true_positive;
  j["embedding_provider"] = provider_label;
  if (r.n_invalid_skipped > 0) j["n_invalid_skipped"] = r.n_invalid_skipped;
  if (per_sample) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : *per_sample) rows.push_back(sample_metrics_to_json(s));
    j["per_sample"] = std::move(rows);
  }
  return j;
}

inline std::string render_report_json(const MetricReport& r, const std::string& provider_label,
                                      const std::vector<SampleMetrics>* per_sample = nullptr) {
  return report_to_json(r, provider_label, per_sample).dump(2) + "\n";
}

inline std::string render_report_csv(const MetricReport& r, const std::string& provider_label) {
  std::string out =
      "miou,recall,ss,siou,i_ss,i_siou,meteor,n_samples,n_gt,n_pred,n_true_positive,"
      "embedding_provider\n";
  out += detail::round4(r.miou) + "," + detail::round4(r.recall) + "," + detail::round4(r.ss) +
         "," + detail::round4(r.siou) + "," + detail::round4(r.i_ss) + "," +
         detail::round4(r.i_siou) + "," + detail::round4(r.meteor) + "," +
         std::to_string(r.n_samples) + "," + std::to_string(r.n_gt) + "," +
         std::to_string(r.n_pred) + "," + std::to_string(r.n_true_positive) + "," +
         provider_label + "\n";
  return out;
}

inline std::string render_report_md(const MetricReport& r, const std::string& provider_label) {
  std::string out;
  out += "| metric | value |\n";
  out += "| --- | --- |\n";
  out += "| mIoU | " + detail::round4(r.miou) + " |\n";
  out += "| Recall | " + detail::round4(r.recall) + " |\n";
  out += "| SS | " + detail::round4(r.ss) + " |\n";
  out += "| SIoU | " + detail::round4(r.siou) + " |\n";
  out += "| I-SS | " + detail::round4(r.i_ss) + " |\n";
  out += "| I-SIoU | " + detail::round4(r.i_siou) + " |\n";
  out += "| METEOR | " + detail::round4(r.meteor) + " |\n";
  out += "| samples | " + std::to_string(r.n_samples) + " |\n";
  out += "| GT targets | " + std::to_string(r.n_gt) + " |\n";
  out += "| predicted targets | " + std::to_string(r.n_pred) + " |\n";
  out += "| true positives | " + std::to_string(r.n_true_positive) + " |\n";
  out += "| embedding provider | " + provider_label + " |\n";
  return out;
}

inline std::string render_report(const MetricReport& r, const std::string& provider_label,
                                 ReportFormat format,
                                 const std::vector<SampleMetrics>* per_sample = nullptr) {
  switch (format) {
    case ReportFormat::json: return render_report_json(r, provider_label, per_sample);
    case ReportFormat::csv: return render_report_csv(r, provider_label);
    case ReportFormat::md: return render_report_md(r, provider_label);
  }
  throw SchemaError("unhandled report format");
}

inline nlohmann::json filter_report_to_json(const FilterReport& r) {
  nlohmann::json j;
  j["kept"] = r.kept;
  j["total"] = r.total;
  j["discarded"] = r.discarded();
  nlohmann::json rules = nlohmann::json::object();
  for (const auto& [rule, count] : r.discarded_by_rule) rules[rule] = count;
  j["discarded_by_rule"] = std::move(rules);
  return j;
}

inline nlohmann::json stats_to_json(const DatasetStats& s) {
  nlohmann::json j;
  j["n_pairs"] = s.n_pairs;
  j["mean_targets"] = s.mean_targets;
  j["max_targets"] = s.max_targets;
  j["n_unique_object_names"] = s.n_unique_object_names;
  j["n_unique_part_names"] = s.n_unique_part_names;
  auto to_object = [](const auto& hist) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [key, count] : hist) {
      if constexpr (std::is_same_v<std::decay_t<decltype(key)>, std::string>)
        obj[key] = count;
      else
        obj[std::to_string(key)] = count;
    }
    return obj;
  };
  j["category_hist"] = to_object(s.category_hist);
  j["source_hist"] = to_object(s.source_hist);
  j["unique_objects_hist"] = to_object(s.unique_objects_hist);
  j["unique_parts_hist"] = to_object(s.unique_parts_hist);
  j["target_count_hist"] = to_object(s.target_count_hist);
  return j;
}

}  // namespace groundkit
