#include "mmdplan/uncertainty.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "mmdplan/mmd.hpp"

namespace mmdplan {
namespace {

UncertainCuboid nominal_facade(ErrorBank bank) {
  return {Cuboid{GroundPose2D({0, 0}, 0.0), CuboidSize{10, 20, 0.2}}, std::move(bank)};
}

bool same_cuboid(const Cuboid& a, const Cuboid& b) {
  return a.pose.origin == b.pose.origin && a.pose.yaw == b.pose.yaw &&
         a.size.length == b.size.length && a.size.height == b.size.height &&
         a.size.thickness == b.size.thickness;
}

TEST(DrawGrid, ZeroBankReproducesNominal) {
  ErrorBank zero{{0.0, 0.0}, {Vec2::Zero(), Vec2::Zero()}, {Vec2::Zero()}};
  const auto u = nominal_facade(zero);
  const auto g = draw_grid(u, {3, 2, 4}, 11);
  ASSERT_EQ(g.size(), 24u);
  for (const auto& c : g.flat()) EXPECT_TRUE(same_cuboid(c, u.nominal));
  EXPECT_EQ(g.max_deviation(), 0.0);
}

TEST(DrawGrid, SingleSampleArithmetic) {
  ErrorBank bank{{0.1}, {Vec2(1.0, 0.0)}, {Vec2(2.0, 0.0)}};
  const auto g = draw_grid(nominal_facade(bank), {1, 1, 1}, 0);
  const Cuboid& c = g.at(0, 0, 0);
  EXPECT_DOUBLE_EQ(c.pose.yaw, 0.1);
  EXPECT_DOUBLE_EQ(c.size.length, 11.0);
  EXPECT_DOUBLE_EQ(c.size.height, 20.0);
  EXPECT_EQ(c.pose.origin, Vec2(2.0, 0.0));
}

TEST(DrawGrid, DeterministicPerSeed) {
  const auto u = nominal_facade(default_bank(3, 64));
  const auto a = draw_grid(u, {4, 4, 4}, 99);
  const auto b = draw_grid(u, {4, 4, 4}, 99);
  const auto c = draw_grid(u, {4, 4, 4}, 100);
  bool any_diff = false;
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_TRUE(same_cuboid(a.flat()[s], b.flat()[s]));
    any_diff |= !same_cuboid(a.flat()[s], c.flat()[s]);
  }
  EXPECT_TRUE(any_diff);
}

TEST(DrawGrid, RejectsBadInput) {
  const auto u = nominal_facade(ErrorBank::zero());
  EXPECT_THROW(draw_grid(u, {0, 1, 1}, 0), std::invalid_argument);
  ErrorBank empty{{}, {Vec2::Zero()}, {Vec2::Zero()}};
  EXPECT_THROW(draw_grid(nominal_facade(empty), {1, 1, 1}, 0), std::invalid_argument);
}

TEST(DrawGrid, ClampsDegenerateSizes) {
  ErrorBank bank{{0.0}, {Vec2(-50.0, -50.0)}, {Vec2::Zero()}};
  const auto g = draw_grid(nominal_facade(bank), {1, 2, 1}, 0);
  for (const auto& c : g.flat()) {
    EXPECT_GE(c.size.length, kMinPerturbedSize);
    EXPECT_GE(c.size.height, kMinPerturbedSize);
  }
}

TEST(DrawGrid, YawMeanConvergesToBankMean) {
  ErrorBank bank = default_bank(5, 500);
  double bank_mean = 0.0;
  for (double v : bank.yaw) bank_mean += v;
  bank_mean /= static_cast<double>(bank.yaw.size());
  const auto g = draw_grid(nominal_facade(bank), {10000, 1, 1}, 8);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) mean += g.at(i, 0, 0).pose.yaw;
  mean /= 10000.0;
  EXPECT_NEAR(mean, bank_mean, 0.05 * std::abs(bank_mean));
}

TEST(DrawGrid, ZeroBankMmdMatchesNominalAlone) {
  const auto u = nominal_facade(ErrorBank::zero());
  const SafetyBand band{2.0, 8.0};
  const auto g = draw_grid(u, {4, 4, 4}, 1);
  const auto single = draw_grid(u, {1, 1, 1}, 1);
  const auto cfg = KernelConfig::uniform(g.counts(), 0.7);
  const auto cfg1 = KernelConfig::uniform(single.counts(), 0.7);
  for (const Vec3& q : {Vec3(0.5, 1, 3), Vec3(3, 0, 5), Vec3(12, -4, 2), Vec3(0, 0, 10)}) {
    EXPECT_NEAR(mmd_point(violation_tensor(g, q, band), cfg),
                mmd_point(violation_tensor(single, q, band), cfg1), 1e-12);
  }
}

TEST(DefaultBank, IsSkewed) {
  const ErrorBank b = default_bank(42, 10000);
  const double n = static_cast<double>(b.yaw.size());
  double mean = 0.0;
  for (double v : b.yaw) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : b.yaw) {
    m2 += (v - mean) * (v - mean);
    m3 += (v - mean) * (v - mean) * (v - mean);
  }
  m2 /= n;
  m3 /= n;
  const double skew = m3 / std::pow(m2, 1.5);
  const double se = std::sqrt(6.0 / n);
  EXPECT_GT(std::abs(skew), 3.0 * se) << "skewness " << skew;
}

TEST(DefaultBank, SizeAndSeedContracts) {
  const ErrorBank b = default_bank(1, 2);
  EXPECT_EQ(b.yaw.size(), 2u);
  EXPECT_EQ(b.size.size(), 2u);
  EXPECT_EQ(b.origin.size(), 2u);
  EXPECT_THROW(default_bank(1, 1), std::invalid_argument);
  const ErrorBank c = default_bank(2, 2);
  EXPECT_NE(b.yaw, c.yaw);
}

TEST(CalibrateBank, IdentityAndSubtraction) {
  const Cuboid truth{GroundPose2D({1, 2}, 0.1), CuboidSize{10, 20, 0.2}};
  const ErrorBank zero = calibrate_bank({{truth, truth}, {truth, truth}});
  EXPECT_TRUE(zero.is_zero());

  Cuboid est = truth;
  est.pose = GroundPose2D({1, 2}, 0.2);
  const ErrorBank one = calibrate_bank({{est, truth}});
  ASSERT_EQ(one.yaw.size(), 1u);
  EXPECT_NEAR(one.yaw[0], 0.1, 1e-15);

  EXPECT_THROW(calibrate_bank({}), std::invalid_argument);
}

TEST(CalibrateBank, WrapsYawDifference) {
  Cuboid est{GroundPose2D({0, 0}, 3.1), CuboidSize{10, 20, 0.2}};
  Cuboid truth{GroundPose2D({0, 0}, -3.1), CuboidSize{10, 20, 0.2}};
  const ErrorBank b = calibrate_bank({{est, truth}});
  EXPECT_NEAR(b.yaw[0], -(2.0 * std::numbers::pi - 6.2), 1e-12);
  EXPECT_LT(std::abs(b.yaw[0]), 0.1);
}

}  // namespace
}  // namespace mmdplan
