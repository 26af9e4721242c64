// groundkit command-line tool: metric evaluation, markup validation, dataset
// construction, and an encoder demo. Exit codes: 0 success, 1 semantic
// findings (invalid lines, skipped samples, empty filter output), 2
// operational failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "groundkit/groundkit.hpp"

namespace gk = groundkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitFailure = 2;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gk::IoError("cannot write " + path);
  out << content;
  if (!out) throw gk::IoError("short write to " + path);
}

std::unique_ptr<gk::EmbeddingProvider> make_provider(const std::string& spec) {
  if (spec.empty() || spec == "hash-fallback")
    return std::make_unique<gk::HashEmbeddingProvider>();
  return std::make_unique<gk::FileEmbeddingProvider>(spec);
}

struct EvaluateOptions {
  std::string gt_path;
  std::string pred_path;
  std::string embeddings;
  double iou_threshold = 0.5;
  double sim_threshold = 0.5;
  std::string format = "json";
  std::string out_path;
  std::string report_path;
  bool skip_invalid = false;
  unsigned jobs = 1;
};

int run_evaluate(const EvaluateOptions& opt) {
  auto provider = make_provider(opt.embeddings);
  gk::EvalConfig config;
  config.iou_threshold = opt.iou_threshold;
  config.sim_threshold = opt.sim_threshold;
  config.jobs = opt.jobs;

  std::ifstream gt_in(opt.gt_path);
  if (!gt_in) throw gk::IoError("cannot open " + opt.gt_path);
  std::ifstream pred_in(opt.pred_path);
  if (!pred_in) throw gk::IoError("cannot open " + opt.pred_path);

  auto next_record = [](std::ifstream& in, const std::string& path, std::size_t& line_no,
                        gk::SampleRecord& rec) -> bool {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string where = path + ":" + std::to_string(line_no);
      gk::json j;
      try {
        j = gk::json::parse(line);
      } catch (const gk::json::parse_error& e) {
        throw gk::SchemaError(where + ": " + e.what());
      }
      rec = gk::sample_record_from_json(j, where);
      return true;
    }
    return false;
  };

  gk::MetricAccumulator acc;
  const std::size_t block_size = std::max<std::size_t>(64, std::size_t{8} * config.jobs);
  std::vector<gk::EvalSample> block;
  std::size_t gt_line = 0, pred_line = 0;
  bool more = true;
  while (more) {
    block.clear();
    while (block.size() < block_size) {
      gk::SampleRecord gt_rec, pred_rec;
      bool has_gt = next_record(gt_in, opt.gt_path, gt_line, gt_rec);
      bool has_pred = next_record(pred_in, opt.pred_path, pred_line, pred_rec);
      if (has_gt != has_pred) {
        const auto& ended = has_gt ? opt.pred_path : opt.gt_path;
        const auto& id = has_gt ? gt_rec.sample_id : pred_rec.sample_id;
        throw gk::SchemaError(ended + " ended early (next sample: " + id + ")");
      }
      if (!has_gt) {
        more = false;
        break;
      }
      block.push_back(gk::combine_records(gt_rec, pred_rec));
    }
    if (block.empty()) break;
    for (const auto& outcome : gk::evaluate_block(block, *provider, config)) {
      if (outcome.ok) {
        acc.add(outcome.metrics);
      } else if (opt.skip_invalid) {
        acc.count_invalid();
      } else {
        throw gk::EvalError("sample " + outcome.sample_id + ": " + outcome.error,
                            outcome.sample_id);
      }
    }
  }

  gk::MetricReport report = acc.report();
  if (report.n_samples == 0 && report.n_invalid_skipped == 0)
    throw gk::SchemaError("no samples in " + opt.gt_path);

  gk::ReportFormat format = gk::report_format_from_name(opt.format);
  std::string rendered = gk::render_report(report, provider->name(), format);
  if (!opt.out_path.empty())
    write_text_file(opt.out_path, rendered);
  if (!opt.report_path.empty())
    write_text_file(opt.report_path,
                    gk::render_report_json(report, provider->name(), &acc.per_sample()));

  std::printf("miou %s\n", gk::detail::round4(report.miou).c_str());
  std::printf("recall %s\n", gk::detail::round4(report.recall).c_str());
  std::printf("ss %s\n", gk::detail::round4(report.ss).c_str());
  std::printf("siou %s\n", gk::detail::round4(report.siou).c_str());
  std::printf("i_ss %s\n", gk::detail::round4(report.i_ss).c_str());
  std::printf("i_siou %s\n", gk::detail::round4(report.i_siou).c_str());
  std::printf("meteor %s\n", gk::detail::round4(report.meteor).c_str());
  if (report.n_invalid_skipped > 0) {
    std::fprintf(stderr, "skipped %llu invalid sample(s)\n",
                 static_cast<unsigned long long>(report.n_invalid_skipped));
    return kExitFindings;
  }
  return kExitOk;
}

struct ValidateOptions {
  std::string in_path;
  std::string out_path;
  std::size_t max_masks = 16;
};

int run_validate(const ValidateOptions& opt) {
  std::string diagnostics;
  std::size_t invalid = 0, total = 0;
  gk::for_each_jsonl(opt.in_path, [&](const gk::json& j, const std::string& where) {
    ++total;
    std::string text = gk::detail::require_field(j, "text", where).get<std::string>();
    std::size_t num_images =
        gk::detail::require_field(j, "num_images", where).get<std::size_t>();
    try {
      gk::GroundedResponse response = gk::parse_response(text, num_images, /*strict=*/true);
      if (response.phrases.size() > opt.max_masks)
        throw gk::MarkupError("response grounds " + std::to_string(response.phrases.size()) +
                                  " phrases, cap is " + std::to_string(opt.max_masks),
                              0);
    } catch (const gk::MarkupError& e) {
      ++invalid;
      diagnostics += where + ": " + e.what() + " (offset " + std::to_string(e.offset()) + ")\n";
    }
  });
  if (!opt.out_path.empty())
    write_text_file(opt.out_path, diagnostics);
  else
    std::fputs(diagnostics.c_str(), stdout);
  std::printf("validated %zu response(s), %zu invalid\n", total, invalid);
  return invalid == 0 ? kExitOk : kExitFindings;
}

struct DatasetOptions {
  std::string corpus_path;
  std::string qa_path;
  std::string compat_path;
  std::string out_path;
  std::string report_path;
  std::string strategy = "nearest-neighbor";
  std::size_t k = 20;
  std::size_t k2 = 5;
  std::size_t set_size = 0;
  std::size_t max_masks = 16;
  std::size_t min_prose_words = 3;
  std::uint64_t seed = 0;
};

int run_build_samples(const DatasetOptions& opt) {
  gk::CorpusIndex corpus = gk::load_corpus(opt.corpus_path);
  gk::CompatibilityTable compat;
  gk::SamplingConfig config;
  config.strategy = gk::strategy_from_name(opt.strategy);
  config.k = opt.k;
  config.k2 = opt.k2;
  config.set_size = opt.set_size;
  config.seed = opt.seed;
  if (config.strategy == gk::SampleSet::Strategy::object_category) {
    if (opt.compat_path.empty())
      throw gk::SchemaError("object-category sampling requires --compat");
    compat = gk::load_compatibility(opt.compat_path);
    config.compatibility = &compat;
  }
  std::string out;
  std::size_t emitted = 0;
  for (const auto& record : corpus.records()) {
    for (const auto& set : gk::sample_image_sets(record, corpus, config)) {
      out += gk::sample_set_to_json(set).dump() + "\n";
      ++emitted;
    }
  }
  if (!opt.out_path.empty())
    write_text_file(opt.out_path, out);
  else
    std::fputs(out.c_str(), stdout);
  std::printf("emitted %zu sample set(s) from %zu image(s)\n", emitted, corpus.size());
  return kExitOk;
}

int run_filter(const DatasetOptions& opt) {
  gk::CorpusIndex corpus = gk::load_corpus(opt.corpus_path);
  std::vector<gk::QAPair> pairs = gk::load_qa_pairs(opt.qa_path);
  gk::FilterOptions options;
  options.max_masks = opt.max_masks;
  options.min_prose_words = opt.min_prose_words;
  auto [kept, report] = gk::filter_qa(pairs, corpus, options);

  std::string out;
  for (const auto& pair : kept) out += gk::qa_pair_to_json(pair).dump() + "\n";
  if (!opt.out_path.empty())
    write_text_file(opt.out_path, out);
  else
    std::fputs(out.c_str(), stdout);

  std::string report_text = gk::filter_report_to_json(report).dump(2) + "\n";
  if (!opt.report_path.empty())
    write_text_file(opt.report_path, report_text);
  std::printf("kept %llu of %llu pair(s)\n", static_cast<unsigned long long>(report.kept),
              static_cast<unsigned long long>(report.total));
  if (report.total > 0 && report.kept == 0) {
    std::fprintf(stderr, "filter discarded every pair; check inputs\n");
    return kExitFindings;
  }
  return kExitOk;
}

int run_stats(const DatasetOptions& opt) {
  gk::CorpusIndex corpus = gk::load_corpus(opt.corpus_path);
  std::vector<gk::QAPair> pairs = gk::load_qa_pairs(opt.qa_path);
  for (auto& pair : pairs) {
    gk::AnnotationTables tables;
    for (const auto& id : pair.sample.image_ids) {
      const gk::ImageRecord* rec = corpus.find(id);
      if (!rec) throw gk::SchemaError("sample image \"" + id + "\" missing from corpus");
      tables.push_back(rec->annotation_table());
    }
    pair.resolved_targets = gk::scan_references(pair.answer, tables).targets;
  }
  gk::DatasetStats stats = gk::dataset_stats(pairs);
  std::string text = gk::stats_to_json(stats).dump(2) + "\n";
  if (!opt.out_path.empty())
    write_text_file(opt.out_path, text);
  else
    std::fputs(text.c_str(), stdout);
  return kExitOk;
}

struct EncoderDemoOptions {
  std::string features_path;
  std::string out_path;
  std::size_t queries = 8;
  std::size_t dim = 16;
  std::size_t out_dim = 24;
  std::size_t heads = 2;
  std::uint64_t seed = 7;
  std::size_t gen_images = 2;
  std::size_t gen_rows = 6;
  std::size_t gen_cols = 12;
};

gk::Matrix random_matrix(gk::SplitMix64& rng, std::size_t rows, std::size_t cols) {
  gk::Matrix m(rows, cols);
  for (double& v : m.data) v = rng.next_double(-0.5, 0.5);
  return m;
}

int run_encoder_demo(const EncoderDemoOptions& opt) {
  gk::FeatureStack stack;
  if (!opt.features_path.empty()) {
    gk::Tensor t = gk::read_tensor(opt.features_path);
    if (t.dims.size() != 3)
      throw gk::IoError("feature tensor must be rank 3 (images x rows x features)");
    const std::size_t n = t.dims[0], rows = t.dims[1], cols = t.dims[2];
    for (std::size_t j = 0; j < n; ++j) {
      gk::Matrix m(rows, cols);
      std::copy(t.values.begin() + static_cast<std::ptrdiff_t>(j * rows * cols),
                t.values.begin() + static_cast<std::ptrdiff_t>((j + 1) * rows * cols),
                m.data.begin());
      stack.images.push_back(std::move(m));
    }
  } else {
    gk::SplitMix64 rng = gk::derived_rng(opt.seed, "demo-features");
    for (std::size_t j = 0; j < opt.gen_images; ++j)
      stack.images.push_back(random_matrix(rng, opt.gen_rows, opt.gen_cols));
  }
  stack.validate();

  gk::SplitMix64 rng = gk::derived_rng(opt.seed, "demo-params");
  const std::size_t d_v = stack.feature_dim();
  gk::QueryBank bank;
  bank.q0 = random_matrix(rng, opt.queries, opt.dim);
  bank.c0 = random_matrix(rng, opt.queries, opt.dim);
  bank.instruction_tokens = gk::Matrix(0, opt.dim);
  auto make_params = [&]() {
    gk::AttentionParams p;
    p.w_query = random_matrix(rng, opt.dim, opt.dim);
    p.w_key = random_matrix(rng, d_v, opt.dim);
    p.w_value = random_matrix(rng, d_v, opt.dim);
    p.w_output = random_matrix(rng, opt.dim, opt.dim);
    p.head_count = opt.heads;
    return p;
  };
  gk::AttentionParams params_c = make_params();
  gk::AttentionParams params_q = make_params();
  gk::LlmProjection proj;
  proj.weight = random_matrix(rng, opt.dim, opt.out_dim);
  proj.bias.resize(opt.out_dim);
  for (double& b : proj.bias) b = rng.next_double(-0.5, 0.5);

  std::vector<gk::Matrix> outputs = gk::encode_images(stack, bank, params_c, params_q, proj);
  std::printf("images %zu, per-image output %zu x %zu\n", outputs.size(), outputs[0].rows,
              outputs[0].cols);
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    double sum_abs = 0.0;
    for (double v : outputs[j].data) sum_abs += std::abs(v);
    std::printf("image %zu mean |value| %s\n", j + 1,
                gk::detail::round4(sum_abs / static_cast<double>(outputs[j].data.size())).c_str());
  }
  if (!opt.out_path.empty()) {
    gk::Tensor t;
    t.dims = {static_cast<std::uint32_t>(outputs.size()),
              static_cast<std::uint32_t>(outputs[0].rows),
              static_cast<std::uint32_t>(outputs[0].cols)};
    for (const auto& m : outputs) t.values.insert(t.values.end(), m.data.begin(), m.data.end());
    gk::write_tensor(opt.out_path, t);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-image grounded segmentation toolkit"};
  app.require_subcommand(1);

  EvaluateOptions eval_opt;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--gt", eval_opt.gt_path, "Ground-truth sample JSONL")->required();
  evaluate->add_option("--pred", eval_opt.pred_path, "Prediction sample JSONL")->required();
  evaluate->add_option("--embeddings", eval_opt.embeddings,
                       "Embedding source: EMB1 file path or \"hash-fallback\"");
  evaluate->add_option("--iou-threshold", eval_opt.iou_threshold, "Mask IoU threshold")
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--sim-threshold", eval_opt.sim_threshold, "Phrase similarity threshold")
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--format", eval_opt.format, "Report format: json, csv, or md");
  evaluate->add_option("--out", eval_opt.out_path, "Report file (stdout summary always prints)");
  evaluate->add_option("--report", eval_opt.report_path,
                       "Full-precision JSON report with per-sample rows");
  evaluate->add_flag("--skip-invalid", eval_opt.skip_invalid,
                     "Count and skip malformed samples instead of aborting");
  evaluate->add_option("--jobs", eval_opt.jobs, "Worker threads")->check(CLI::Range(1u, 256u));

  ValidateOptions val_opt;
  CLI::App* validate = app.add_subcommand("validate", "Check grounded-markup responses");
  validate->add_option("--in", val_opt.in_path, "Response JSONL ({\"text\",\"num_images\"})")
      ->required();
  validate->add_option("--out", val_opt.out_path, "Diagnostics file (default: stdout)");
  validate->add_option("--max-masks", val_opt.max_masks, "Grounded-phrase cap");

  DatasetOptions ds_opt;
  CLI::App* dataset = app.add_subcommand("dataset", "Dataset construction utilities");
  dataset->require_subcommand(1);
  CLI::App* build = dataset->add_subcommand("build-samples", "Sample related image sets");
  build->add_option("--corpus", ds_opt.corpus_path, "Corpus JSONL")->required();
  build->add_option("--strategy", ds_opt.strategy, "nearest-neighbor or object-category");
  build->add_option("--compat", ds_opt.compat_path, "Compatibility table JSON");
  build->add_option("--k", ds_opt.k, "Nearest-neighbor pool size");
  build->add_option("--k2", ds_opt.k2, "Category pool size");
  build->add_option("--set-size", ds_opt.set_size, "Pin set size to 2 or 3 (0 = draw)");
  build->add_option("--seed", ds_opt.seed, "Sampling seed");
  build->add_option("--out", ds_opt.out_path, "Sample-set JSONL output");

  CLI::App* filter = dataset->add_subcommand("filter", "Apply the QA discard cascade");
  filter->add_option("--qa", ds_opt.qa_path, "QA JSONL")->required();
  filter->add_option("--corpus", ds_opt.corpus_path, "Corpus JSONL")->required();
  filter->add_option("--max-masks", ds_opt.max_masks, "Target cap per pair");
  filter->add_option("--min-prose-words", ds_opt.min_prose_words,
                     "Rule (a): minimum non-identifier words");
  filter->add_option("--out", ds_opt.out_path, "Kept QA JSONL output");
  filter->add_option("--report", ds_opt.report_path, "Filter report JSON output");

  CLI::App* stats = dataset->add_subcommand("stats", "Dataset composition statistics");
  stats->add_option("--qa", ds_opt.qa_path, "QA JSONL")->required();
  stats->add_option("--corpus", ds_opt.corpus_path, "Corpus JSONL")->required();
  stats->add_option("--out", ds_opt.out_path, "Stats JSON output (default: stdout)");

  EncoderDemoOptions demo_opt;
  CLI::App* demo = app.add_subcommand("encoder-demo", "Run the multi-image encoder once");
  demo->add_option("--features", demo_opt.features_path,
                   "Rank-3 tensor file (images x rows x features); omit to generate");
  demo->add_option("--queries", demo_opt.queries, "Query count L_I");
  demo->add_option("--dim", demo_opt.dim, "Query width D_I");
  demo->add_option("--out-dim", demo_opt.out_dim, "Projection width D");
  demo->add_option("--heads", demo_opt.heads, "Attention heads");
  demo->add_option("--seed", demo_opt.seed, "Parameter seed");
  demo->add_option("--out", demo_opt.out_path, "Output tensor file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (evaluate->parsed()) return run_evaluate(eval_opt);
    if (validate->parsed()) return run_validate(val_opt);
    if (dataset->parsed()) {
      if (build->parsed()) return run_build_samples(ds_opt);
      if (filter->parsed()) return run_filter(ds_opt);
      if (stats->parsed()) return run_stats(ds_opt);
    }
    if (demo->parsed()) return run_encoder_demo(demo_opt);
    std::fprintf(stderr, "no subcommand selected\n");
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}
