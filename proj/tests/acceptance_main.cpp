// Standalone acceptance suite. Each check prints exactly one PASS/FAIL line
// and the process exits non-zero if any check failed. The CLI determinism
// check shells out to the command-line binary (--cli PATH); the runtime
// budget check re-runs the unit suite (--unit PATH) and times everything.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "groundkit/groundkit.hpp"
#include "filter_fixture.hpp"
#include "helpers.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void run_check(int index, const char* name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("unexpected exception: ") + e.what();
  }
  std::printf("%s  %2d  %-36s %s\n", ok ? "PASS" : "FAIL", index, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. RLE IoU agrees with the per-pixel definition on random masks.

bool check_rle_iou(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0001u);
  auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t h = 1 + rng.next_below(16);
    std::size_t w = 1 + rng.next_below(16);
    groundkit::BinaryMask a = testutil::random_mask(rng, h, w, rng.next_double());
    groundkit::BinaryMask b = testutil::random_mask(rng, h, w, rng.next_double());
    double via_rle = groundkit::iou(groundkit::rle_encode(a), groundkit::rle_encode(b));
    double naive = testutil::naive_iou(a, b);
    worst = std::max(worst, std::abs(via_rle - naive));
  }
  // Degenerate corner: two empty masks agree perfectly by convention.
  groundkit::BinaryMask e1 = groundkit::BinaryMask::zeros(4, 4);
  groundkit::BinaryMask e2 = groundkit::BinaryMask::zeros(4, 4);
  bool empty_ok = groundkit::iou(groundkit::rle_encode(e1), groundkit::rle_encode(e2)) == 1.0;
  double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "1000 pairs, max deviation " << worst << ", " << elapsed << "s";
  detail = os.str();
  return worst <= 1e-12 && empty_ok && elapsed < 5.0;
}

// ---------------------------------------------------------------------------
// 2. Analytic dice/focal gradients match central finite differences.

bool check_loss_gradients(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0002u);
  const double h = 1e-5;
  const double smooth = 1e-6;
  const double gamma = 2.0;
  const double alpha = 0.25;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    groundkit::SoftMask pred(8, 8, std::vector<double>(64));
    // Keep probabilities clear of the clamp boundary so the losses are
    // smooth on the whole [p - h, p + h] interval.
    for (auto& p : pred.probs) p = rng.next_double(0.02, 0.98);
    groundkit::BinaryMask target = testutil::random_mask(rng, 8, 8, 0.5);

    std::vector<double> dice_an = groundkit::dice_loss_grad(pred, target, smooth);
    std::vector<double> focal_an = groundkit::focal_loss_grad(pred, target, gamma, alpha);
    for (std::size_t i = 0; i < pred.probs.size(); ++i) {
      groundkit::SoftMask hi = pred, lo = pred;
      hi.probs[i] += h;
      lo.probs[i] -= h;
      double dice_fd = (groundkit::dice_loss(hi, target, smooth) -
                        groundkit::dice_loss(lo, target, smooth)) /
                       (2.0 * h);
      double focal_fd = (groundkit::focal_loss(hi, target, gamma, alpha) -
                         groundkit::focal_loss(lo, target, gamma, alpha)) /
                        (2.0 * h);
      double dice_err = std::abs(dice_fd - dice_an[i]) /
                        std::max({std::abs(dice_fd), std::abs(dice_an[i]), 1e-6});
      double focal_err = std::abs(focal_fd - focal_an[i]) /
                         std::max({std::abs(focal_fd), std::abs(focal_an[i]), 1e-6});
      worst = std::max({worst, dice_err, focal_err});
    }
  }
  std::ostringstream os;
  os << "100 trials, worst relative error " << worst;
  detail = os.str();
  return worst <= 1e-4;
}

// ---------------------------------------------------------------------------
// 3. Greedy matching equals repeated global-best selection; recall equals a
//    brute-force recount of thresholded true positives.

groundkit::MatchResult reference_greedy(const std::vector<groundkit::TargetEntry>& pred,
                                        const std::vector<groundkit::TargetEntry>& gt) {
  groundkit::MatchResult result;
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  while (true) {
    bool found = false;
    double best_iou = -1.0;
    std::size_t best_gt = 0, best_pred = 0;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (gt_used[j]) continue;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred_used[i]) continue;
        if (pred[i].image_index != gt[j].image_index) continue;
        double v = groundkit::iou(pred[i].mask, gt[j].mask);
        bool better = v > best_iou ||
                      (v == best_iou && (j < best_gt || (j == best_gt && i < best_pred)));
        if (!found || better) {
          found = true;
          best_iou = v;
          best_gt = j;
          best_pred = i;
        }
      }
    }
    if (!found) break;
    pred_used[best_pred] = true;
    gt_used[best_gt] = true;
    result.pairs.push_back({best_pred, best_gt, best_iou});
  }
  for (std::size_t j = 0; j < gt.size(); ++j)
    if (!gt_used[j]) result.unmatched_gt.push_back(j);
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!pred_used[i]) result.unmatched_pred.push_back(i);
  return result;
}

bool check_matching_and_recall(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0003u);
  groundkit::HashEmbeddingProvider provider(32);
  const std::vector<std::string> vocab = {"mug",  "lamp",   "sofa",
                                          "rug",  "drawer", "kettle"};
  auto random_targets = [&](std::size_t n) {
    std::vector<groundkit::TargetEntry> out;
    for (std::size_t t = 0; t < n; ++t) {
      groundkit::TargetEntry e;
      e.image_index = 1 + rng.next_below(2);
      e.phrase = vocab[rng.next_below(vocab.size())];
      e.mask = groundkit::rle_encode(testutil::random_mask(rng, 6, 6, rng.next_double()));
      out.push_back(std::move(e));
    }
    return out;
  };

  for (int trial = 0; trial < 200; ++trial) {
    auto gt = random_targets(1 + rng.next_below(4));
    auto pred = random_targets(rng.next_below(5));
    groundkit::MatchResult m = groundkit::match_masks(pred, gt);
    groundkit::MatchResult ref = reference_greedy(pred, gt);
    if (m.pairs != ref.pairs || m.unmatched_gt != ref.unmatched_gt ||
        m.unmatched_pred != ref.unmatched_pred) {
      detail = "matching diverged from repeated global-best selection at trial " +
               std::to_string(trial);
      return false;
    }

    groundkit::RecallResult r = groundkit::recall(m, pred, gt, provider, 0.5, 0.5);
    std::size_t tp = 0;
    for (const auto& p : m.pairs) {
      if (!(p.iou > 0.5)) continue;
      double cos = groundkit::cosine_similarity(provider.embed(pred[p.pred_idx].phrase),
                                                provider.embed(gt[p.gt_idx].phrase));
      if (cos > 0.5) ++tp;
    }
    if (r.true_positives != tp ||
        r.recall != static_cast<double>(tp) / static_cast<double>(m.n_gt())) {
      detail = "recall recount mismatch at trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "200 trials, matching and recall both exact";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Closed-form sentence-score values.

bool check_meteor_closed_forms(std::string& detail) {
  using groundkit::meteor_score;
  double single = meteor_score("word", "word");
  const std::string eight = "alpha bravo charlie delta echo foxtrot golf hotel";
  double eight_score = meteor_score(eight, eight);
  double disjoint = meteor_score("red square", "blue circle");
  double stemmed = meteor_score("running", "run");
  groundkit::MeteorParams no_stem;
  no_stem.use_stemming = false;
  double unstemmed = meteor_score("running", "run", no_stem);

  std::ostringstream os;
  os << "single " << single << ", eight-word " << eight_score << ", disjoint " << disjoint
     << ", stem " << stemmed << "/" << unstemmed;
  detail = os.str();
  return single == 0.5 && eight_score == 0.9990234375 && disjoint == 0.0 && stemmed == 0.5 &&
         unstemmed == 0.0;
}

// ---------------------------------------------------------------------------
// 5. Markup parse/serialize round-trip plus identifier fixtures.

bool check_markup_round_trip(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0005u);
  const std::vector<std::string> words = {"the",  "silver", "mug",  "near", "a",
                                          "lamp", "on",     "this", "shelf"};
  const std::vector<std::string> ws = {"", " ", "  ", "\n", " \t "};
  auto prose = [&](std::size_t max_words) {
    std::string out;
    std::size_t n = rng.next_below(max_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += words[rng.next_below(words.size())];
    }
    return out;
  };
  auto phrase = [&]() {
    std::string out = words[rng.next_below(words.size())];
    std::size_t extra = rng.next_below(3);
    for (std::size_t i = 0; i < extra; ++i) out += ' ' + words[rng.next_below(words.size())];
    return out;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t groups = 1 + rng.next_below(4);
    std::string text = prose(4);
    for (std::size_t g = 0; g < groups; ++g) {
      text += "<p>" + phrase() + "</p>" + ws[rng.next_below(ws.size())] + "[SEG]" +
              ws[rng.next_below(ws.size())] + "(IMAGE" + std::to_string(1 + rng.next_below(3)) +
              ")";
      text += ' ' + prose(4);
    }
    groundkit::GroundedResponse r1 = groundkit::parse_response(text, 3);
    std::string s1 = groundkit::serialize_response(r1);
    groundkit::GroundedResponse r2 = groundkit::parse_response(s1, 3);
    if (r1.phrases.size() != r2.phrases.size()) {
      detail = "phrase count changed across round-trip at trial " + std::to_string(trial);
      return false;
    }
    for (std::size_t i = 0; i < r1.phrases.size(); ++i) {
      const auto& a = r1.phrases[i];
      const auto& b = r2.phrases[i];
      if (a.text != b.text || a.image_index != b.image_index ||
          a.within_image_order != b.within_image_order) {
        detail = "phrase " + std::to_string(i) + " changed across round-trip at trial " +
                 std::to_string(trial);
        return false;
      }
    }
    if (groundkit::serialize_response(r2) != s1) {
      detail = "serialization is not a fixpoint at trial " + std::to_string(trial);
      return false;
    }
  }

  using groundkit::parse_identifier;
  groundkit::EntityIdentifier obj = parse_identifier("table_101");
  bool obj_ok = obj.name == "table" && obj.image_index == 1 && obj.object_id == 1 &&
                !obj.part_id.has_value() && obj.extra_refs.empty();
  groundkit::EntityIdentifier part = parse_identifier("drawer_10101");
  bool part_ok = part.name == "drawer" && part.image_index == 1 && part.object_id == 1 &&
                 part.part_id.has_value() && *part.part_id == 1 && part.extra_refs.empty();
  groundkit::EntityIdentifier multi = parse_identifier("rocket_101_202");
  bool multi_ok = multi.name == "rocket" && multi.image_index == 1 && multi.object_id == 1 &&
                  !multi.part_id.has_value() && multi.extra_refs.size() == 1 &&
                  multi.extra_refs[0] == groundkit::ImageRef{2, 2, std::nullopt};
  detail = "1000 round-trips plus identifier fixtures";
  return obj_ok && part_ok && multi_ok;
}

// ---------------------------------------------------------------------------
// 6. Cross-attention invariants.

groundkit::Matrix random_matrix(groundkit::SplitMix64& rng, std::size_t r, std::size_t c,
                                double lo = -1.0, double hi = 1.0) {
  groundkit::Matrix m(r, c);
  for (auto& x : m.data) x = rng.next_double(lo, hi);
  return m;
}

groundkit::AttentionParams random_params(groundkit::SplitMix64& rng, std::size_t d_i,
                                         std::size_t d_v, std::size_t heads) {
  groundkit::AttentionParams p;
  p.w_query = random_matrix(rng, d_i, d_i);
  p.w_key = random_matrix(rng, d_v, d_i);
  p.w_value = random_matrix(rng, d_v, d_i);
  p.w_output = random_matrix(rng, d_i, d_i);
  p.head_count = heads;
  return p;
}

bool check_attention_invariants(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0006u);

  // (a) Attention weight rows are probability distributions.
  for (std::size_t heads : {1u, 2u, 4u}) {
    groundkit::Matrix q = random_matrix(rng, 4, 8);
    groundkit::Matrix kv = random_matrix(rng, 7, 5);
    groundkit::AttentionParams p = random_params(rng, 8, 5, heads);
    std::vector<groundkit::Matrix> weights;
    groundkit::cross_attention(q, kv, p, &weights);
    if (weights.size() != heads) {
      detail = "expected one weight matrix per head";
      return false;
    }
    for (const auto& w : weights)
      for (std::size_t r = 0; r < w.rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < w.cols; ++c) sum += w.at(r, c);
        if (std::abs(sum - 1.0) > 1e-6) {
          detail = "attention row sum off by " + std::to_string(std::abs(sum - 1.0));
          return false;
        }
      }
  }

  // (b) The cross-image summary ignores image order (up to summation order).
  groundkit::FeatureStack stack;
  for (int i = 0; i < 3; ++i) stack.images.push_back(random_matrix(rng, 5, 6));
  groundkit::QueryBank bank;
  bank.q0 = random_matrix(rng, 4, 8);
  bank.c0 = random_matrix(rng, 4, 8);
  groundkit::AttentionParams pc = random_params(rng, 8, 6, 2);
  groundkit::Matrix base = groundkit::enrich_queries(bank, groundkit::fuse_features(stack), pc);
  groundkit::FeatureStack permuted;
  permuted.images = {stack.images[2], stack.images[0], stack.images[1]};
  groundkit::Matrix swapped =
      groundkit::enrich_queries(bank, groundkit::fuse_features(permuted), pc);
  double perm_diff = 0.0;
  for (std::size_t i = 0; i < base.data.size(); ++i)
    perm_diff = std::max(perm_diff, std::abs(base.data[i] - swapped.data[i]));
  if (perm_diff > 1e-9) {
    detail = "summary moved by " + std::to_string(perm_diff) + " under image permutation";
    return false;
  }

  // (c) A zero value projection leaves the queries bitwise untouched.
  groundkit::AttentionParams inert = random_params(rng, 8, 6, 2);
  inert.w_value = groundkit::Matrix(6, 8);
  groundkit::Matrix enriched =
      groundkit::enrich_queries(bank, groundkit::fuse_features(stack), inert);
  if (enriched.rows != bank.q0.rows || enriched.cols != bank.q0.cols ||
      std::memcmp(enriched.data.data(), bank.q0.data.data(),
                  bank.q0.data.size() * sizeof(double)) != 0) {
    detail = "zero value projection altered query bits";
    return false;
  }

  // (d) Full pipeline shape grid with distinct visual/query/output widths.
  const std::size_t d_v = 6, d_i = 8, d_out = 10;
  for (std::size_t n_images : {1u, 2u, 3u}) {
    for (std::size_t l_i : {4u, 32u}) {
      groundkit::FeatureStack fs;
      for (std::size_t i = 0; i < n_images; ++i) fs.images.push_back(random_matrix(rng, 7, d_v));
      groundkit::QueryBank qb;
      qb.q0 = random_matrix(rng, l_i, d_i);
      qb.c0 = random_matrix(rng, l_i, d_i);
      qb.instruction_tokens = random_matrix(rng, 3, d_i);
      groundkit::AttentionParams pc2 = random_params(rng, d_i, d_v, 2);
      groundkit::AttentionParams pq = random_params(rng, d_i, d_v, 4);
      groundkit::LlmProjection proj;
      proj.weight = random_matrix(rng, d_i, d_out);
      proj.bias.assign(d_out, 0.25);
      std::vector<groundkit::Matrix> out = groundkit::encode_images(fs, qb, pc2, pq, proj);
      if (out.size() != n_images) {
        detail = "wrong output count for " + std::to_string(n_images) + " images";
        return false;
      }
      for (const auto& m : out)
        if (m.rows != l_i || m.cols != d_out || !m.all_finite()) {
          detail = "bad output shape for " + std::to_string(n_images) + " images, " +
                   std::to_string(l_i) + " queries";
          return false;
        }
    }
  }

  detail = "row sums, permutation, inertness, shape grid";
  return true;
}

// ---------------------------------------------------------------------------
// 7. Ablation baselines: pooling idempotence/permutation, projection identity.

bool check_baselines(std::string& detail) {
  groundkit::SplitMix64 rng(0xACC0007u);
  groundkit::FeatureStack stack;
  for (int i = 0; i < 3; ++i) stack.images.push_back(random_matrix(rng, 4, 5));

  groundkit::FeatureStack pooled = groundkit::pooling_baseline(stack);
  groundkit::FeatureStack twice = groundkit::pooling_baseline(pooled);
  for (std::size_t i = 0; i < pooled.images.size(); ++i)
    if (!(twice.images[i] == pooled.images[i])) {
      detail = "pooling is not idempotent";
      return false;
    }
  groundkit::FeatureStack permuted;
  permuted.images = {stack.images[1], stack.images[2], stack.images[0]};
  groundkit::FeatureStack pooled_perm = groundkit::pooling_baseline(permuted);
  if (!(pooled_perm.images[0] == pooled.images[0])) {
    detail = "pooled mean depends on image order";
    return false;
  }

  const std::size_t wide = stack.num_images() * stack.feature_dim();
  groundkit::FeatureStack mixed =
      groundkit::projection_baseline(stack, groundkit::Matrix::identity(wide));
  double worst = 0.0;
  for (std::size_t i = 0; i < stack.images.size(); ++i)
    for (std::size_t k = 0; k < stack.images[i].data.size(); ++k)
      worst = std::max(worst, std::abs(mixed.images[i].data[k] - stack.images[i].data[k]));
  std::ostringstream os;
  os << "identity mix deviation " << worst;
  detail = os.str();
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 8. Hand-labeled filter fixture: verdicts, conservation, idempotence.

bool check_filter_fixture(std::string& detail) {
  groundkit::CorpusIndex corpus(testutil::filter_corpus_records());
  std::vector<testutil::LabeledPair> labeled = testutil::labeled_filter_pairs();

  for (std::size_t i = 0; i < labeled.size(); ++i) {
    auto [kept, report] = groundkit::filter_qa({labeled[i].pair}, corpus);
    std::string verdict = kept.size() == 1 ? "kept" : report.discarded_by_rule.begin()->first;
    if (verdict != labeled[i].expected) {
      detail = "pair " + std::to_string(i + 1) + " got \"" + verdict + "\", expected \"" +
               labeled[i].expected + "\"";
      return false;
    }
  }

  std::vector<groundkit::QAPair> all;
  for (const auto& lp : labeled) all.push_back(lp.pair);
  auto [kept, report] = groundkit::filter_qa(all, corpus);
  if (report.total != all.size() || kept.size() + report.discarded() != report.total) {
    detail = "kept + discarded does not equal total";
    return false;
  }
  auto [kept2, report2] = groundkit::filter_qa(kept, corpus);
  if (kept2.size() != kept.size() || report2.discarded() != 0) {
    detail = "filter is not idempotent on its own output";
    return false;
  }
  detail = "20/20 verdicts, conservation, idempotent (" + std::to_string(kept.size()) + " kept)";
  return true;
}

// ---------------------------------------------------------------------------
// 9. The evaluate command is bitwise deterministic across worker counts.

bool check_cli_determinism(std::string& detail, const std::string& cli_path) {
  if (cli_path.empty()) {
    detail = "--cli path not provided";
    return false;
  }
  groundkit::SplitMix64 rng(0xACC0009u);
  const std::vector<std::string> vocab = {"mug",    "lamp", "sofa",  "rug",
                                          "drawer", "sink", "shelf", "stool"};
  auto sentence = [&]() {
    std::string out;
    std::size_t n = 3 + rng.next_below(6);
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += vocab[rng.next_below(vocab.size())];
    }
    return out;
  };
  auto targets = [&](std::size_t n) {
    std::vector<groundkit::TargetEntry> out;
    for (std::size_t t = 0; t < n; ++t) {
      groundkit::TargetEntry e;
      e.image_index = 1 + rng.next_below(2);
      e.phrase = vocab[rng.next_below(vocab.size())];
      e.mask =
          groundkit::rle_encode(testutil::random_mask(rng, 12, 12, rng.next_double(0.2, 0.8)));
      out.push_back(std::move(e));
    }
    return out;
  };

  testutil::TempDir dir("acceptance_cli");
  const std::string gt_path = dir.file("gt.jsonl");
  const std::string pred_path = dir.file("pred.jsonl");
  {
    std::ofstream gt_out(gt_path), pred_out(pred_path);
    for (int i = 0; i < 100; ++i) {
      groundkit::EvalSample s;
      s.sample_id = "sample-" + std::to_string(i);
      s.images = {{12, 12}, {12, 12}};
      s.question = "where is the " + vocab[rng.next_below(vocab.size())];
      s.gt = targets(1 + rng.next_below(3));
      s.pred = targets(1 + rng.next_below(3));
      s.gt_sentence = sentence();
      s.pred_sentence = sentence();
      std::string line = groundkit::eval_sample_to_json(s).dump();
      gt_out << line << '\n';
      pred_out << line << '\n';
    }
  }

  auto run_eval = [&](int jobs, const std::string& out, const std::string& rep) {
    std::ostringstream cmd;
    cmd << quoted(cli_path) << " evaluate --gt " << quoted(gt_path) << " --pred "
        << quoted(pred_path) << " --jobs " << jobs << " --out " << quoted(out) << " --report "
        << quoted(rep) << " > " << quoted(dir.file("stdout_" + std::to_string(jobs) + ".txt"))
        << " 2>&1";
    return std::system(cmd.str().c_str());
  };

  const std::string out1 = dir.file("out1.json"), rep1 = dir.file("rep1.json");
  const std::string out8 = dir.file("out8.json"), rep8 = dir.file("rep8.json");
  if (run_eval(1, out1, rep1) != 0 || run_eval(8, out8, rep8) != 0) {
    detail = "evaluate command exited non-zero";
    return false;
  }
  std::string a = read_file(out1), b = read_file(out8);
  std::string pa = read_file(rep1), pb = read_file(rep8);
  if (a.empty() || pa.empty()) {
    detail = "evaluate command produced empty reports";
    return false;
  }
  if (a != b || pa != pb) {
    detail = "reports differ between 1 and 8 workers";
    return false;
  }

  // The command's output must also equal the library evaluated in one piece.
  std::vector<groundkit::EvalSample> samples = groundkit::load_eval_samples(gt_path, pred_path);
  groundkit::HashEmbeddingProvider provider;
  std::vector<groundkit::SampleMetrics> per_sample;
  groundkit::MetricReport rep =
      groundkit::evaluate_dataset(samples, provider, {}, false, &per_sample);
  if (groundkit::render_report(rep, provider.name(), groundkit::ReportFormat::json) != a ||
      groundkit::render_report_json(rep, provider.name(), &per_sample) != pa) {
    detail = "command reports differ from the in-process library evaluation";
    return false;
  }

  std::ostringstream os;
  os << "100 samples, jobs 1 == jobs 8 == library, report " << a.size() << "B, per-sample "
     << pa.size() << "B";
  detail = os.str();
  return true;
}

// ---------------------------------------------------------------------------
// 10. Every CLI subcommand runs end to end, and everything — unit suite
//     included — finishes inside the time budget.

bool run_cli_fixtures(const std::string& cli_path, std::string& why) {
  testutil::TempDir dir("acceptance_fixtures");
  auto shell = [&](const std::string& args, const std::string& log) {
    std::string cmd =
        quoted(cli_path) + " " + args + " > " + quoted(dir.file(log)) + " 2>&1";
    return std::system(cmd.c_str());
  };

  const std::string corpus = dir.file("corpus.jsonl");
  {
    std::ofstream out(corpus);
    for (const auto& rec : testutil::filter_corpus_records())
      out << groundkit::image_record_to_json(rec).dump() << '\n';
  }

  const std::string responses = dir.file("responses.jsonl");
  {
    std::ofstream out(responses);
    groundkit::json a{{"text", "the <p>silver mug</p> [SEG] (IMAGE1) on the shelf"},
                      {"num_images", 2}};
    groundkit::json b{{"text", "<p>a lamp</p> [SEG] (IMAGE2) beside <p>a rug</p> [SEG] (IMAGE1)"},
                      {"num_images", 2}};
    out << a.dump() << '\n' << b.dump() << '\n';
  }
  if (shell("validate --in " + quoted(responses) + " --out " + quoted(dir.file("diag.txt")),
            "validate.log") != 0 ||
      !read_file(dir.file("diag.txt")).empty()) {
    why = "validate of an all-valid file must exit 0 with empty diagnostics";
    return false;
  }

  auto build = [&](const std::string& out, const std::string& log) {
    return shell("dataset build-samples --corpus " + quoted(corpus) +
                     " --strategy nearest-neighbor --seed 11 --out " + quoted(out),
                 log);
  };
  if (build(dir.file("sets.jsonl"), "build.log") != 0 ||
      read_file(dir.file("sets.jsonl")).empty()) {
    why = "dataset build-samples failed or emitted nothing";
    return false;
  }
  if (build(dir.file("sets_again.jsonl"), "build2.log") != 0 ||
      read_file(dir.file("sets_again.jsonl")) != read_file(dir.file("sets.jsonl"))) {
    why = "dataset build-samples is not deterministic for a fixed seed";
    return false;
  }

  const std::string qa = dir.file("qa.jsonl");
  {
    std::ofstream out(qa);
    for (const auto& lp : testutil::labeled_filter_pairs())
      out << groundkit::qa_pair_to_json(lp.pair).dump() << '\n';
  }
  const std::string kept_path = dir.file("kept.jsonl");
  if (shell("dataset filter --qa " + quoted(qa) + " --corpus " + quoted(corpus) + " --out " +
                quoted(kept_path) + " --report " + quoted(dir.file("filter_report.json")),
            "filter.log") != 0) {
    why = "dataset filter exited non-zero";
    return false;
  }
  groundkit::json filter_report =
      groundkit::json::parse(read_file(dir.file("filter_report.json")));
  if (filter_report.at("kept").get<std::uint64_t>() != 6 ||
      filter_report.at("total").get<std::uint64_t>() != 20) {
    why = "dataset filter report disagrees with the hand-labeled fixture";
    return false;
  }

  if (shell("dataset stats --qa " + quoted(kept_path) + " --corpus " + quoted(corpus) +
                " --out " + quoted(dir.file("stats.json")),
            "stats.log") != 0 ||
      groundkit::json::parse(read_file(dir.file("stats.json"))).at("n_pairs").get<int>() != 6) {
    why = "dataset stats failed or counted wrong";
    return false;
  }

  const std::string demo_out = dir.file("demo.tnsr");
  if (shell("encoder-demo --queries 4 --dim 8 --out-dim 10 --heads 2 --seed 5 --out " +
                quoted(demo_out),
            "demo.log") != 0) {
    why = "encoder-demo exited non-zero";
    return false;
  }
  groundkit::Tensor demo = groundkit::read_tensor(demo_out);
  if (demo.dims.size() != 3) {
    why = "encoder-demo wrote a tensor of rank " + std::to_string(demo.dims.size());
    return false;
  }
  return true;
}

bool check_runtime_budget(std::string& detail, const std::string& cli_path,
                          const std::string& unit_path, Clock::time_point start) {
  if (cli_path.empty() || unit_path.empty()) {
    detail = "--cli or --unit path not provided";
    return false;
  }
  std::string why;
  if (!run_cli_fixtures(cli_path, why)) {
    detail = "CLI fixtures: " + why;
    return false;
  }
  auto t0 = Clock::now();
  std::string cmd = quoted(unit_path) + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  double unit_s = seconds_since(t0);
  double total_s = seconds_since(start);
  std::ostringstream os;
  os << "CLI fixtures ok, unit suite " << unit_s << "s (exit " << rc << "), combined " << total_s
     << "s";
  detail = os.str();
  return rc == 0 && total_s < 60.0;
}

}  // namespace

int main(int argc, char** argv) {
  Clock::time_point start = Clock::now();
  std::string cli_path, unit_path;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) cli_path = argv[++i];
    else if (arg == "--unit" && i + 1 < argc) unit_path = argv[++i];
  }

  run_check(1, "rle-iou-matches-per-pixel", check_rle_iou);
  run_check(2, "loss-gradients-match-finite-diff", check_loss_gradients);
  run_check(3, "greedy-matching-and-recall", check_matching_and_recall);
  run_check(4, "meteor-closed-forms", check_meteor_closed_forms);
  run_check(5, "markup-round-trip-and-identifiers", check_markup_round_trip);
  run_check(6, "cross-attention-invariants", check_attention_invariants);
  run_check(7, "baseline-encoders", check_baselines);
  run_check(8, "qa-filter-fixture", check_filter_fixture);
  run_check(9, "cli-parallel-determinism",
            [&](std::string& d) { return check_cli_determinism(d, cli_path); });
  run_check(10, "cli-fixtures-and-runtime-budget",
            [&](std::string& d) { return check_runtime_budget(d, cli_path, unit_path, start); });

  return g_failures == 0 ? 0 : 1;
}
