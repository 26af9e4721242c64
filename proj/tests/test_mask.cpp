#include <catch2/catch_amalgamated.hpp>

#include "groundkit/mask.hpp"
#include "groundkit/rng.hpp"
#include "helpers.hpp"

using namespace groundkit;
using testutil::mask_of;
using testutil::naive_iou;
using testutil::random_mask;

TEST_CASE("rle_encode follows the row-major background-first convention") {
  BinaryMask m = mask_of(2, 2, "1100");
  RleMask rle = rle_encode(m);
  CHECK(rle.counts == std::vector<std::uint64_t>{0, 2, 2});

  BinaryMask zeros = BinaryMask::zeros(3, 3);
  CHECK(rle_encode(zeros).counts == std::vector<std::uint64_t>{9});

  BinaryMask ones = mask_of(1, 4, "1111");
  CHECK(rle_encode(ones).counts == std::vector<std::uint64_t>{0, 4});
}

TEST_CASE("rle round-trip is the identity on random 16x16 masks") {
  SplitMix64 rng(0x5eedu);
  for (int trial = 0; trial < 1000; ++trial) {
    BinaryMask m = random_mask(rng, 16, 16, rng.next_double());
    RleMask rle = rle_encode(m);
    rle.validate();
    CHECK(rle_decode(rle) == m);
  }
}

TEST_CASE("rle_decode rejects counts that do not cover the mask") {
  RleMask bad;
  bad.height = 2;
  bad.width = 2;
  bad.counts = {0, 3};
  CHECK_THROWS_AS(rle_decode(bad), ShapeError);

  RleMask zero_mid;
  zero_mid.height = 1;
  zero_mid.width = 2;
  zero_mid.counts = {1, 0, 1};
  CHECK_THROWS_AS(zero_mid.validate(), ShapeError);
}

TEST_CASE("iou handles the canonical pixel fixtures") {
  BinaryMask top = mask_of(2, 2, "1100");
  BinaryMask both = mask_of(2, 2, "1111");
  BinaryMask bottom = mask_of(2, 2, "0011");

  CHECK(iou(top, top) == 1.0);
  CHECK(iou(top, bottom) == 0.0);
  CHECK(iou(top, both) == 0.5);
  CHECK(iou(BinaryMask::zeros(4, 4), BinaryMask::zeros(4, 4)) == 1.0);
}

TEST_CASE("iou is symmetric and bounded") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    BinaryMask a = random_mask(rng, 7, 9);
    BinaryMask b = random_mask(rng, 7, 9);
    double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("iou rejects dimension mismatches") {
  CHECK_THROWS_AS(iou(BinaryMask::zeros(2, 2), BinaryMask::zeros(2, 3)), ShapeError);
}

TEST_CASE("rle iou equals per-pixel counting") {
  SplitMix64 rng(0xabcdefu);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t h = 1 + static_cast<std::size_t>(rng.next_below(16));
    std::size_t w = 1 + static_cast<std::size_t>(rng.next_below(16));
    BinaryMask a = random_mask(rng, h, w, rng.next_double());
    BinaryMask b = random_mask(rng, h, w, rng.next_double());
    double via_rle = iou(rle_encode(a), rle_encode(b));
    CHECK(std::abs(via_rle - naive_iou(a, b)) < 1e-12);
  }
}

TEST_CASE("coseg_scores reports pixel accuracy and jaccard") {
  BinaryMask half = mask_of(2, 2, "1100");
  auto perfect = coseg_scores(half, half);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.jaccard == 1.0);

  auto miss = coseg_scores(BinaryMask::zeros(2, 2), half);
  CHECK(miss.precision == 0.5);
  CHECK(miss.jaccard == 0.0);
}

TEST_CASE("coseg_scores matches brute-force pixel counting on random pairs") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMask pred = random_mask(rng, 8, 8);
    BinaryMask gt = random_mask(rng, 8, 8);
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
      if (pred.data[i] == gt.data[i]) ++agree;
    auto scores = coseg_scores(pred, gt);
    CHECK(scores.precision == static_cast<double>(agree) / 64.0);
    CHECK(scores.jaccard == naive_iou(pred, gt));
  }
}

TEST_CASE("visibility_score weights the mean area ratio by scale disparity") {
  BinaryMask full = mask_of(2, 2, "1111");
  CHECK(visibility_score({full}, {4}) == 1.0);

  BinaryMask quarter = mask_of(2, 2, "1000");
  CHECK(visibility_score({quarter, quarter}, {4, 4}) == 0.25);

  // Ratios 0.5 and 0.125: mean 0.3125, disparity weight 0.25.
  BinaryMask half = mask_of(2, 2, "1100");
  BinaryMask eighth = mask_of(2, 4, "10000000");
  CHECK(visibility_score({half, eighth}, {4, 8}) == 0.078125);
}

TEST_CASE("visibility_score is invariant under uniform area rescaling") {
  BinaryMask small_a = mask_of(2, 2, "1100");
  BinaryMask small_b = mask_of(2, 2, "1000");
  double base = visibility_score({small_a, small_b}, {4, 4});

  // Same ratios realized on 4x4 images (areas x4): 8/16 and 4/16.
  BinaryMask big_a = mask_of(4, 4, "1111111100000000");
  BinaryMask big_b = mask_of(4, 4, "1111000000000000");
  CHECK(visibility_score({big_a, big_b}, {16, 16}) == base);
}

TEST_CASE("visibility_score degenerate cases") {
  CHECK(visibility_score({BinaryMask::zeros(2, 2)}, {4}) == 0.0);
  CHECK_THROWS_AS(visibility_score({}, {}), ShapeError);
  CHECK_THROWS_AS(visibility_score({BinaryMask::zeros(2, 2)}, {0}), ShapeError);
  CHECK_THROWS_AS(visibility_score({BinaryMask::zeros(2, 2)}, {4, 4}), ShapeError);
}
