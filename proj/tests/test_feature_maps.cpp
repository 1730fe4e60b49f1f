#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "cfusion/feature_maps.hpp"
#include "oracles.hpp"

namespace cfusion {
namespace {

HeatmapAnnotation Ann(double u, double v, double w, double h, int cls = 0) {
  return {Vec2(u, v), cls, Box2D{u, v, w, h, false}};
}

TEST(GaussianRadius, SymmetricInWidthAndHeight) {
  for (double w : {5.0, 20.0, 100.0}) {
    for (double h : {7.0, 33.0, 250.0}) EXPECT_DOUBLE_EQ(GaussianRadius(w, h, 0.7), GaussianRadius(h, w, 0.7));
  }
}

TEST(GaussianRadius, TightOverlapShrinksToFloor) {
  EXPECT_LT(GaussianRadius(100, 60, 0.999999), 1e-3);
  EXPECT_DOUBLE_EQ(GaussianSigma(100, 60, 0.999999), 1.0 / 3.0);
}

TEST(GaussianRadius, ShiftedBoxesKeepMinOverlap) {
  const double r = GaussianRadius(100, 60, 0.7);
  const double sigma = GaussianSigma(100, 60, 0.7);
  EXPECT_NEAR(3 * sigma, r, 1e-12);
  EXPECT_GE(oracle::WorstCornerIou(100, 60, r), 0.7 - 1e-9);
  // Tight: a slightly larger shift breaks the bound somewhere.
  EXPECT_LT(oracle::WorstCornerIou(100, 60, r * 1.01), 0.7);
}

TEST(GaussianRadius, RandomBoxesKeepMinOverlap) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(2, 300), mo(0.3, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double w = u(rng), h = u(rng), m = mo(rng);
    EXPECT_GE(oracle::WorstCornerIou(w, h, GaussianRadius(w, h, m), 2), m - 1e-9);
  }
}

TEST(GaussianRadius, RejectsBadInput) {
  EXPECT_THROW(GaussianRadius(0, 10, 0.7), Error);
  EXPECT_THROW(GaussianRadius(10, 10, 1.0), Error);
  EXPECT_THROW(GaussianRadius(10, 10, 0.0), Error);
}

TEST(RenderGtHeatmap, CenterIsOne) {
  const auto planes = RenderGtHeatmap(std::vector{Ann(101, 62, 80, 40)}, 1, 50, 30, 4);
  EXPECT_DOUBLE_EQ(planes[0].at(25, 15), 1.0);
  EXPECT_EQ(*std::max_element(planes[0].data.begin(), planes[0].data.end()), 1.0);
  EXPECT_EQ(std::count(planes[0].data.begin(), planes[0].data.end(), 1.0), 1);
}

TEST(RenderGtHeatmap, ValueAtSigma) {
  // A box whose sigma is exactly 2 cells: the cell 2 away holds exp(-1/2).
  double lo = 10, hi = 400;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (GaussianSigma(mid, mid, 0.7, 4) < 2.0 ? lo : hi) = mid;
  }
  const double side = 0.5 * (lo + hi);
  ASSERT_NEAR(GaussianSigma(side, side, 0.7, 4), 2.0, 1e-12);
  const auto planes = RenderGtHeatmap(std::vector{Ann(80, 80, side, side)}, 1, 40, 40, 4);
  EXPECT_NEAR(planes[0].at(22, 20), std::exp(-0.5), 1e-9);
  EXPECT_NEAR(planes[0].at(20, 18), std::exp(-0.5), 1e-9);
}

TEST(RenderGtHeatmap, MaxNotSum) {
  const Plane a = RenderGtHeatmap(std::vector{Ann(40, 40, 60, 60)}, 1, 40, 20, 4)[0];
  const Plane b = RenderGtHeatmap(std::vector{Ann(80, 40, 60, 60)}, 1, 40, 20, 4)[0];
  const Plane both = RenderGtHeatmap(std::vector{Ann(40, 40, 60, 60), Ann(80, 40, 60, 60)}, 1, 40, 20, 4)[0];
  for (std::size_t i = 0; i < both.data.size(); ++i) EXPECT_EQ(both.data[i], std::max(a.data[i], b.data[i]));
}

TEST(RenderGtHeatmap, ClassesStaySeparate) {
  const auto planes = RenderGtHeatmap(std::vector{Ann(40, 40, 60, 60, 0), Ann(120, 40, 60, 60, 2)}, 3, 40, 20, 4);
  EXPECT_DOUBLE_EQ(planes[0].at(10, 10), 1.0);
  EXPECT_LT(planes[0].at(30, 10), 1.0);
  EXPECT_DOUBLE_EQ(planes[2].at(30, 10), 1.0);
  EXPECT_EQ(*std::max_element(planes[1].data.begin(), planes[1].data.end()), 0.0);
}

TEST(RenderGtHeatmap, AddingObjectsNeverLowersCells) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<HeatmapAnnotation> anns;
  Plane prev(50, 30);
  for (int i = 0; i < 20; ++i) {
    anns.push_back(Ann(u(rng) * 199, u(rng) * 119, 5 + 100 * u(rng), 5 + 100 * u(rng)));
    const Plane next = RenderGtHeatmap(anns, 1, 50, 30, 4)[0];
    for (std::size_t k = 0; k < next.data.size(); ++k) ASSERT_GE(next.data[k], prev.data[k]);
    prev = next;
  }
}

TEST(RenderGtHeatmap, OutsideCenterThrows) {
  EXPECT_THROW(RenderGtHeatmap(std::vector{Ann(500, 10, 10, 10)}, 1, 50, 30, 4), Error);
  EXPECT_THROW(RenderGtHeatmap(std::vector{Ann(10, 10, 10, 10, 3)}, 1, 50, 30, 4), Error);
}

RadarFeatureTarget Target(double cx, double cy, double w, double h, double depth, Vec2 v = Vec2::Zero()) {
  return {Box2D{cx, cy, w, h, false}, depth, v};
}

TEST(RasterizeRadar, FillsNormalizedDepth) {
  const auto t = std::vector{Target(100, 60, 80, 40, 30.0, Vec2(5, -2.5))};
  const RadarPlanes p = RasterizeRadarFeatures(t, 50, 30, 4, 0.3, {60, 10});
  EXPECT_DOUBLE_EQ(p.depth.at(25, 15), 0.5);
  EXPECT_DOUBLE_EQ(p.vx.at(25, 15), 0.5);
  EXPECT_DOUBLE_EQ(p.vy.at(25, 15), -0.25);
  // |x - 25| <= 0.3 * 20 = 6 cells, |y - 15| <= 0.3 * 10 = 3 cells.
  EXPECT_DOUBLE_EQ(p.depth.at(31, 18), 0.5);
  EXPECT_DOUBLE_EQ(p.depth.at(32, 15), 0.0);
  EXPECT_DOUBLE_EQ(p.depth.at(25, 19), 0.0);
  EXPECT_DOUBLE_EQ(p.depth.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(p.vx.at(0, 0), 0.0);
}

TEST(RasterizeRadar, NearerObjectDominates) {
  const auto t = std::vector{Target(100, 60, 80, 40, 30.0, Vec2(1, 1)), Target(110, 60, 80, 40, 10.0, Vec2(-3, 2))};
  const RadarPlanes p = RasterizeRadarFeatures(t, 50, 30, 4);
  EXPECT_DOUBLE_EQ(p.depth.at(26, 15), 10.0 / 60);
  EXPECT_DOUBLE_EQ(p.vx.at(26, 15), -0.3);
  EXPECT_DOUBLE_EQ(p.vy.at(26, 15), 0.2);
  EXPECT_DOUBLE_EQ(p.depth.at(20, 15), 0.5);  // only the far object reaches here
}

TEST(RasterizeRadar, OrderInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RadarFeatureTarget> t;
    for (int i = 0; i < 8; ++i) {
      t.push_back(Target(u(rng) * 200, u(rng) * 120, 10 + 90 * u(rng), 10 + 90 * u(rng), 1 + 50 * u(rng),
                         Vec2(20 * u(rng) - 10, 20 * u(rng) - 10)));
    }
    if (trial % 5 == 0) t.push_back(Target(t[0].box2d.cx, t[0].box2d.cy, 50, 50, t[0].depth, Vec2(3, 3)));
    const RadarPlanes a = RasterizeRadarFeatures(t, 50, 30, 4);
    std::shuffle(t.begin(), t.end(), rng);
    const RadarPlanes b = RasterizeRadarFeatures(t, 50, 30, 4);
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(a.vx, b.vx);
    EXPECT_EQ(a.vy, b.vy);
  }
}

TEST(RasterizeRadar, TinyBoxStillCoversCenterCell) {
  const auto t = std::vector{Target(101, 61, 2, 2, 12.0)};
  const RadarPlanes p = RasterizeRadarFeatures(t, 50, 30, 4);
  EXPECT_DOUBLE_EQ(p.depth.at(25, 15), 0.2);
}

TEST(RasterizeRadar, VelocityClamped) {
  const auto t = std::vector{Target(100, 60, 40, 40, 12.0, Vec2(25, -40))};
  const RadarPlanes p = RasterizeRadarFeatures(t, 50, 30, 4);
  EXPECT_DOUBLE_EQ(p.vx.at(25, 15), 1.0);
  EXPECT_DOUBLE_EQ(p.vy.at(25, 15), -1.0);
}

TEST(RasterizeRadar, RejectsBadParameters) {
  EXPECT_THROW(RasterizeRadarFeatures({}, 10, 10, 4, 0.0), Error);
  EXPECT_THROW(RasterizeRadarFeatures({}, 10, 10, 4, 0.3, {0.0, 10}), Error);
}

TEST(DepthTransform, Examples) {
  EXPECT_DOUBLE_EQ(DepthDecode(0.5), 1.0);
  for (double y : {0.1, 0.5, 0.9}) EXPECT_NEAR(DepthEncode(DepthDecode(y)), y, 1e-15);
  EXPECT_GT(DepthDecode(1e-6), DepthDecode(1e-3));
  EXPECT_GT(DepthDecode(1e-9), 1e8);
}

TEST(DepthTransform, RoundTripAndMonotone) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-3, 3);
  double prev_d = 0.0, prev_y = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double d = std::pow(10.0, u(rng));
    EXPECT_NEAR(DepthDecode(DepthEncode(d)), d, 1e-12 * d);
  }
  for (double d = 0.01; d < 500; d *= 1.1) {
    EXPECT_GT(d, prev_d);
    EXPECT_LT(DepthEncode(d), prev_y);
    prev_d = d;
    prev_y = DepthEncode(d);
  }
}

TEST(DepthTransform, DomainErrors) {
  for (double bad : {0.0, -1.0}) {
    try {
      DepthEncode(bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
  for (double bad : {0.0, 1.0, -0.2, 1.5}) EXPECT_THROW(DepthDecode(bad), Error);
}

TEST(DepthTransform, LogitMatchesSigmoidComposition) {
  for (double x : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    EXPECT_NEAR(DepthDecodeLogit(x), DepthDecode(s), 1e-9 * DepthDecodeLogit(x));
  }
}

TEST(FeatureMapStack, ShapeChecks) {
  FeatureMapStack s = FeatureMapStack::ForImage(800, 450, 4);
  EXPECT_EQ(s.width(), 200);
  EXPECT_EQ(s.height(), 113);
  s.Add("a");
  EXPECT_THROW(s.Add("a"), Error);
  EXPECT_THROW(s.Add("b", Plane(10, 10)), Error);
  EXPECT_THROW(s.Get("missing"), Error);
  EXPECT_THROW(FeatureMapStack(0, 10, 4), Error);
}

TEST(FeatureMapStack, BinaryRoundTrip) {
  FeatureMapStack s(7, 5, 4);
  Plane& a = s.Add(channel::Heatmap(0));
  Plane& b = s.Add(channel::kRadarDepth);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = 0.25 * static_cast<double>(i);
    b.data[i] = -1.5 + static_cast<double>(i);
  }
  std::stringstream ss;
  WriteFeatureStack(s, ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "CFFM");
  EXPECT_EQ(bytes.size(), 4 + 5 * 4 + (4 + 9) + (4 + 11) + 2 * 35 * 4);
  ss.seekg(0);
  const FeatureMapStack back = ReadFeatureStack(ss);
  EXPECT_EQ(back.names(), s.names());
  EXPECT_EQ(back.planes(), s.planes());
  EXPECT_EQ(back.stride(), 4);
}

TEST(FeatureMapStack, RejectsCorruptFile) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(ReadFeatureStack(bad), Error);
  FeatureMapStack s(3, 3, 1);
  s.Add("x");
  std::stringstream ss;
  WriteFeatureStack(s, ss);
  std::stringstream truncated(ss.str().substr(0, ss.str().size() - 5));
  EXPECT_THROW(ReadFeatureStack(truncated), Error);
}

}  // namespace
}  // namespace cfusion
