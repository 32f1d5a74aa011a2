#include <gtest/gtest.h>

#include <cmath>

#include "srl/geometry.hpp"
#include "srl/matcher.hpp"
#include "srl/rng.hpp"
#include "test_support.hpp"

using namespace srl;

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 0, 15, 10}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(iou({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {10, 0, 20, 10}), 0.0);
}

TEST(Iou, Degenerate) {
  EXPECT_THROW(iou({0, 0, 0, 10}, {0, 0, 1, 1}), DegenerateBox);
  EXPECT_THROW(ciou({0, 0, 1, 1}, {3, 3, 2, 4}), DegenerateBox);
}

TEST(Iou, PixelOracle) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    int c[8];
    for (int k = 0; k < 8; k += 2) {
      c[k] = static_cast<int>(rng.below(63));
      c[k + 1] = c[k] + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(64 - c[k] - 1) + 1));
    }
    // c = {ax1, ax2, ay1, ay2, bx1, bx2, by1, by2}
    const double got = iou({double(c[0]), double(c[2]), double(c[1]), double(c[3])},
                           {double(c[4]), double(c[6]), double(c[5]), double(c[7])});
    EXPECT_NEAR(got, test::pixel_iou(c[0], c[2], c[1], c[3], c[4], c[6], c[5], c[7]), 1e-12);
  }
}

TEST(Ciou, HandDerivedSeparatedSquares) {
  const auto r = ciou({0, 0, 10, 10}, {20, 0, 30, 10});
  EXPECT_EQ(r.iou, 0.0);
  EXPECT_EQ(r.aspect_term_v, 0.0);
  EXPECT_EQ(r.alpha, 0.0);
  EXPECT_DOUBLE_EQ(r.center_distance_sq, 400.0);
  EXPECT_DOUBLE_EQ(r.enclosing_diag_sq, 1000.0);
  EXPECT_NEAR(r.ciou, -0.4, 1e-12);
}

TEST(Ciou, IdenticalIsOne) {
  EXPECT_EQ(ciou({1.5, 2, 7, 9}, {1.5, 2, 7, 9}).ciou, 1.0);
}

TEST(Ciou, ShiftedBelowIou) {
  const auto r = ciou({0, 0, 10, 10}, {1, 0, 11, 10});
  EXPECT_LT(r.ciou, r.iou);
}

TEST(Ciou, MatchesReferenceAndBounds) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto a = test::random_box(rng, 100), b = test::random_box(rng, 100);
    const auto r = ciou(a, b);
    EXPECT_NEAR(r.ciou, test::ciou_reference(a, b), 1e-12);
    EXPECT_LE(r.ciou, r.iou);
    EXPECT_GT(r.ciou, -2.0);
    EXPECT_LE(r.ciou, 1.0);
    EXPECT_NEAR(r.ciou, ciou(b, a).ciou, 1e-12);
  }
}

TEST(Ciou, MonotoneSeparation) {
  const BBox a{0, 0, 10, 20};
  double prev = 2.0;
  for (int step = 0; step < 60; ++step) {
    const double t = step * 0.75;
    const double c = ciou(a, {2 + t, 4 + 0.5 * t, 8 + t, 16 + 0.5 * t}).ciou;
    EXPECT_LE(c, prev + 1e-12);
    prev = c;
  }
}

TEST(SemanticSimilarity, Examples) {
  EXPECT_EQ(semantic_similarity("cup", "cups"), 1.0);
  EXPECT_EQ(semantic_similarity("red cup", "cup"), 0.5);
  EXPECT_EQ(semantic_similarity("dog", "zebra"), 0.0);
  EXPECT_EQ(semantic_similarity("Cup", "cup"), 1.0);
  EXPECT_THROW(semantic_similarity("", "cup"), EmptyLabel);
}

TEST(PairCost, Examples) {
  EXPECT_EQ(pair_cost({"p", "cup", {0, 0, 1, 1}}, {"g", "cup", {0, 0, 1, 1}}), 0.0);
  EXPECT_EQ(pair_cost({"p", "cup", {0, 0, 1, 1}}, {"g", "cup", {5, 5, 6, 6}}), 1.0);
  EXPECT_EQ(pair_cost({"p", "dog", {0, 0, 1, 1}}, {"g", "cup", {5, 5, 6, 6}}), 3.0);
}

TEST(MatchObjects, IdentityAndEmpty) {
  std::vector<ObjectNode> g = {{"a", "cup", {0, 0, 1, 1}}, {"b", "plate", {2, 2, 4, 4}}, {"c", "dog", {5, 0, 9, 3}}};
  auto m = match_objects(g, g);
  EXPECT_EQ(m.total_cost, 0.0);
  ASSERT_EQ(m.pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.pairs[i], std::make_pair(i, i));

  auto none = match_objects({}, g);
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_EQ(none.unmatched_gt.size(), 3u);
}

TEST(MatchObjects, OnePredAgainstThree) {
  std::vector<ObjectNode> gt = {{"a", "cup", {0, 0, 1, 1}}, {"b", "plate", {2, 2, 4, 4}}, {"c", "dog", {5, 0, 9, 3}}};
  std::vector<ObjectNode> pred = {{"x", "plate", {2, 2, 4, 4.5}}};
  auto m = match_objects(pred, gt);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(m.unmatched_gt, (std::vector<std::size_t>{0, 2}));
}

TEST(SolveAssignment, BruteForce) {
  Rng rng(9);
  for (int i = 0; i < 400; ++i) {
    const auto n = rng.below(7), m = rng.below(7);
    CostMatrix c(n, m);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < m; ++k) c(r, k) = rng.bernoulli(0.3) ? double(rng.below(3)) : rng.uniform(0, 3);
    }
    auto res = solve_assignment(c);
    EXPECT_EQ(res.pairs.size(), std::min(n, m));
    EXPECT_NEAR(res.total_cost, test::brute_force_assignment(c), 1e-9);
    double sum = 0.0;
    for (auto [r, k] : res.pairs) sum += c(r, k);
    EXPECT_NEAR(sum, res.total_cost, 1e-12);
    EXPECT_EQ(res.unmatched_pred.size() + res.pairs.size(), n);
    EXPECT_EQ(res.unmatched_gt.size() + res.pairs.size(), m);
  }
}

TEST(SolveAssignment, TiesPickLexicographicallySmallest) {
  CostMatrix all_equal(3, 3, 1.0);
  auto r = solve_assignment(all_equal);
  EXPECT_EQ(r.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}}));

  CostMatrix wide(2, 4, 0.0);
  r = solve_assignment(wide);
  EXPECT_EQ(r.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));

  CostMatrix tall(4, 2, 0.0);
  tall(0, 0) = tall(0, 1) = 5.0;
  r = solve_assignment(tall);
  EXPECT_EQ(r.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{1, 0}, {2, 1}}));
  EXPECT_EQ(r.unmatched_pred, (std::vector<std::size_t>{0, 3}));
}

TEST(SolveAssignment, ScaleInvariantPairing) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    std::vector<ObjectNode> pred, gt;
    static const char* labels[] = {"cup", "plate", "red cup", "dog"};
    for (int k = 0; k < 4; ++k) pred.push_back({"p", labels[rng.below(4)], test::random_box(rng, 50)});
    for (int k = 0; k < 3; ++k) gt.push_back({"g", labels[rng.below(4)], test::random_box(rng, 50)});
    const auto a = match_objects(pred, gt, {1.0, 2.0});
    const auto b = match_objects(pred, gt, {3.0, 6.0});
    EXPECT_EQ(a.pairs, b.pairs);
  }
}
