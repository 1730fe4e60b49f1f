#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cfusion/objectives.hpp"
#include "oracles.hpp"

namespace cfusion {
namespace {

using V = std::vector<double>;

TEST(FocalLoss, PerfectPredictionIsNearZero) {
  const V gt = {1, 0, 0, 1, 0};
  V pred;
  for (double g : gt) pred.push_back(ClampProbability(g));
  EXPECT_LE(FocalLoss(pred, gt), 2 * kProbabilityEpsilon * gt.size());
}

TEST(FocalLoss, PositiveCell) { EXPECT_NEAR(FocalLoss(V{0.5}, V{1.0}), -0.25 * std::log(0.5), 1e-15); }

TEST(FocalLoss, GaussianTailCell) {
  EXPECT_NEAR(FocalLoss(V{0.5}, V{0.8}), -std::pow(0.2, 4) * 0.25 * std::log(0.5), 1e-15);
  EXPECT_NEAR(FocalLoss(V{0.5}, V{0.8}), 2.77e-4, 1e-6);
}

TEST(FocalLoss, NormalizedByPositives) {
  const V pred = {0.5, 0.5, 0.3};
  const V gt = {1, 1, 0};
  const double per = -0.25 * std::log(0.5);
  const double neg = -std::pow(0.3, 2) * std::log(0.7);
  EXPECT_NEAR(FocalLoss(pred, gt), (2 * per + neg) / 2, 1e-15);
}

TEST(FocalLoss, NonNegativeAndPermutationInvariant) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    V pred(40), gt(40);
    for (int i = 0; i < 40; ++i) {
      pred[i] = u(rng);
      gt[i] = u(rng) < 0.1 ? 1.0 : u(rng);
    }
    const double l = FocalLoss(pred, gt);
    EXPECT_GE(l, 0.0);
    std::vector<std::size_t> idx(40);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    V p2, g2;
    for (auto i : idx) p2.push_back(pred[i]), g2.push_back(gt[i]);
    EXPECT_NEAR(FocalLoss(p2, g2), l, 1e-12 * std::max(1.0, l));
  }
}

TEST(FocalLoss, ConfigExponents) {
  LossConfig cfg{1.0, 2.0};
  EXPECT_NEAR(FocalLoss(V{0.4}, V{0.5}, cfg), -0.25 * 0.4 * std::log(0.6), 1e-15);
}

TEST(FocalLoss, ShapeMismatch) {
  try {
    FocalLoss(V{0.5, 0.5}, V{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(L1Loss, Examples) {
  EXPECT_EQ(L1Loss(V{1, 2}, V{1, 2}), 0.0);
  EXPECT_DOUBLE_EQ(L1Loss(V{1, 2}, V{0, 0}), 1.5);
  const std::vector<std::uint8_t> none = {0, 0};
  EXPECT_EQ(L1Loss(V{1, 2}, V{0, 0}, none), 0.0);
  const std::vector<std::uint8_t> second = {0, 1};
  EXPECT_DOUBLE_EQ(L1Loss(V{1, 2}, V{0, 0}, second), 2.0);
  EXPECT_THROW(L1Loss(V{1}, V{1, 2}), Error);
  const std::vector<std::uint8_t> short_mask = {1};
  EXPECT_THROW(L1Loss(V{1, 2}, V{1, 2}, short_mask), Error);
}

TEST(BceLoss, Examples) {
  const V t = {0, 1};
  const V p = {ClampProbability(0), ClampProbability(1)};
  EXPECT_LT(BceLoss(p, t), 1e-6);
  EXPECT_NEAR(BceLoss(V{0.5}, V{1}), std::log(2.0), 1e-15);
  EXPECT_NEAR(BceLoss(V{0.5}, V{0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(BceLoss(V{0.3}, V{1}), -std::log(0.3), 1e-15);
  EXPECT_NEAR(BceLoss(V{0.3}, V{1}), BceLoss(V{0.7}, V{0}), 1e-15);
  const std::vector<std::uint8_t> none = {0};
  EXPECT_EQ(BceLoss(V{0.3}, V{1}, none), 0.0);
  EXPECT_THROW(BceLoss(V{0.3}, V{1, 0}), Error);
}

bool RelClose(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-3}); }

TEST(Gradients, FocalMatchesFiniteDifference) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int t = 0; t < 50; ++t) {
    V pred(12), gt(12);
    for (int i = 0; i < 12; ++i) {
      pred[i] = u(rng);
      gt[i] = i % 4 == 0 ? 1.0 : u(rng);
    }
    const auto num = oracle::NumericGradient([&](const V& x) { return FocalLoss(x, gt); }, pred, 1e-6);
    const auto ana = FocalLossGradient(pred, gt);
    for (int i = 0; i < 12; ++i) EXPECT_TRUE(RelClose(ana[i], num[i], 1e-5)) << ana[i] << " vs " << num[i];
  }
}

TEST(Gradients, BceMatchesFiniteDifference) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int t = 0; t < 50; ++t) {
    V pred(10), tgt(10);
    std::vector<std::uint8_t> mask(10);
    for (int i = 0; i < 10; ++i) {
      pred[i] = u(rng);
      tgt[i] = u(rng) < 0.5 ? 0.0 : 1.0;
      mask[i] = u(rng) < 0.7;
    }
    const auto num = oracle::NumericGradient([&](const V& x) { return BceLoss(x, tgt, mask); }, pred, 1e-6);
    const auto ana = BceLossGradient(pred, tgt, mask);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(RelClose(ana[i], num[i], 1e-5)) << ana[i] << " vs " << num[i];
  }
}

TEST(Gradients, L1MatchesFiniteDifferenceAwayFromKinks) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 50; ++t) {
    V pred(10), tgt(10);
    for (int i = 0; i < 10; ++i) {
      pred[i] = u(rng);
      tgt[i] = pred[i] + (u(rng) < 0 ? -1 : 1) * (0.01 + std::abs(u(rng)));
    }
    const auto num = oracle::NumericGradient([&](const V& x) { return L1Loss(x, tgt); }, pred, 1e-6);
    const auto ana = L1LossGradient(pred, tgt);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(RelClose(ana[i], num[i], 1e-5));
  }
}

TEST(Gradients, MaskedEntriesHaveZeroGradient) {
  const std::vector<std::uint8_t> mask = {1, 0};
  const auto g = L1LossGradient(V{1, 1}, V{0, 0}, mask);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  const auto b = BceLossGradient(V{0.4, 0.4}, V{1, 1}, mask);
  EXPECT_EQ(b[1], 0.0);
}

}  // namespace
}  // namespace cfusion
