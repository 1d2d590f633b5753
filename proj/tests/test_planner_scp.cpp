#include "mmdplan/planner_scp.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

namespace mmdplan {
namespace {

BoundaryState rest(const Vec3& p) {
  BoundaryState s;
  s.position = p;
  return s;
}

// Dense KKT oracle: min sum ||second difference||^2 / dt^3 subject to the six
// boundary rows per axis, axis by axis.
Eigen::MatrixX3d kkt_min_acceleration(const BoundaryState& s, const BoundaryState& g, int n, double dt) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
  for (int r = 0; r < n - 2; ++r) d.row(r).segment(r, 3) << 1.0, -2.0, 1.0;
  const Eigen::MatrixXd h = 2.0 * d.transpose() * d / (dt * dt * dt);
  Eigen::MatrixX3d out(n, 3);
  for (int a = 0; a < 3; ++a) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(6, n);
    Eigen::VectorXd b(6);
    e(0, 0) = 1;
    b(0) = s.position(a);
    e(1, 1) = 1, e(1, 0) = -1;
    b(1) = s.velocity(a) * dt;
    e(2, 2) = 1, e(2, 1) = -2, e(2, 0) = 1;
    b(2) = s.acceleration(a) * dt * dt;
    e(3, n - 1) = 1;
    b(3) = g.position(a);
    e(4, n - 1) = 1, e(4, n - 2) = -1;
    b(4) = g.velocity(a) * dt;
    e(5, n - 1) = 1, e(5, n - 2) = -2, e(5, n - 3) = 1;
    b(5) = g.acceleration(a) * dt * dt;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + 6, n + 6);
    k.topLeftCorner(n, n) = h;
    k.topRightCorner(n, 6) = e.transpose();
    k.bottomLeftCorner(6, n) = e;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 6);
    rhs.tail(6) = b;
    out.col(a) = k.fullPivLu().solve(rhs).head(n);
  }
  return out;
}

UncertainCuboid wall(ErrorBank bank) {
  return {Cuboid{GroundPose2D({0, 0}, 0.0), CuboidSize{8, 6, 0.2}}, std::move(bank)};
}

TEST(Inflate, ZeroBankIsNominal) {
  const auto u = wall(ErrorBank::zero());
  const Cuboid c = inflate(u, 0.95, {4, 4, 4}, 1);
  EXPECT_EQ(c.pose.origin, u.nominal.pose.origin);
  EXPECT_EQ(c.size.thickness, u.nominal.size.thickness);
  EXPECT_EQ(c.size.length, u.nominal.size.length);
  EXPECT_EQ(c.size.height, u.nominal.size.height);
}

TEST(Inflate, OriginShiftsAlongNormal) {
  ErrorBank bank{{0.0}, {Vec2::Zero()}, {Vec2(1.0, 0.0), Vec2(-1.0, 0.0)}};
  const auto u = wall(bank);
  const Cuboid c = inflate(u, 1.0, {4, 4, 4}, 3);
  EXPECT_NEAR(c.size.thickness, 0.2 + 2.0, 1e-12);
  EXPECT_NEAR(c.size.length, 8.0, 1e-12);
  EXPECT_NEAR(c.size.height, 6.0, 1e-12);
  EXPECT_LT((c.pose.origin - u.nominal.pose.origin).norm(), 1e-12);
}

TEST(Inflate, ContainsNominalAndFreshSamples) {
  for (std::uint64_t b = 0; b < 10; ++b) {
    const auto u = wall(default_bank(b, 64));
    const Cuboid c = inflate(u, 0.95, {4, 4, 4}, b);
    EXPECT_TRUE(contains_all_vertices(c, u.nominal)) << "bank " << b;
    const auto fresh = draw_realizations(u, 1000, 1000 + b);
    int inside = 0;
    for (const auto& s : fresh) inside += contains_all_vertices(c, s);
    EXPECT_GE(inside, 950) << "bank " << b;
  }
}

TEST(Inflate, MonotoneInQuantile) {
  const auto u = wall(default_bank(4, 64));
  const Cuboid lo = inflate(u, 0.6, {4, 4, 4}, 9);
  const Cuboid hi = inflate(u, 0.9, {4, 4, 4}, 9);
  EXPECT_GE(hi.size.thickness, lo.size.thickness);
  EXPECT_GE(hi.size.length, lo.size.length);
  EXPECT_GE(hi.size.height, lo.size.height);
  EXPECT_TRUE(contains_all_vertices(hi, lo, 1e-9));
}

TEST(RankInit, EmptyWorldAndDegenerateDraw) {
  ScpConfig cfg;
  const auto a = mmd_rank_init({}, Vec3(0, 0, 2), Vec3(10, 0, 2), 20, 0.3, cfg);
  EXPECT_EQ(a.index, 0);
  const auto line = straight_line(Vec3(0, 0, 2), Vec3(10, 0, 2), 20, 0.3);
  EXPECT_EQ(a.trajectory.points, line.points);

  cfg.candidates = 1;
  cfg.stomp_scale = 0.0;
  const std::vector<UncertainCuboid> world{wall(default_bank(1, 64))};
  const auto b = mmd_rank_init(world, Vec3(-10, 0, 2), Vec3(10, 0, 2), 20, 0.3, cfg);
  EXPECT_EQ(b.index, 0);
  EXPECT_EQ(b.trajectory.points, straight_line(Vec3(-10, 0, 2), Vec3(10, 0, 2), 20, 0.3).points);
}

TEST(RankInit, WallBeatsStraightLine) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScpConfig cfg;
    cfg.seed = seed;
    const std::vector<UncertainCuboid> world{wall(default_bank(seed, 64))};
    const auto r = mmd_rank_init(world, Vec3(-10, 0, 3), Vec3(10, 0, 3), 40, 0.25, cfg);
    ASSERT_EQ(r.mmd.size(), 64u);
    EXPECT_GT(r.mmd[0], 0.0);
    EXPECT_LT(r.mmd[r.index], r.mmd[0]) << "seed " << seed;
  }
}

TEST(Scp, ObstacleFreeMatchesKktOracle) {
  BoundaryState s = rest(Vec3(0, 0, 2));
  s.velocity = Vec3(1.0, 0.5, 0.0);
  const BoundaryState g = rest(Vec3(15, 6, 4));
  const int n = 30;
  const double dt = 0.4;
  ScpConfig cfg;
  cfg.candidates = 1;
  const auto res = plan_scp({}, s, g, cfg, n, dt);
  const auto ref = kkt_min_acceleration(s, g, n, dt);
  EXPECT_TRUE(res.success);
  EXPECT_LT((res.trajectory.points - ref).rowwise().norm().maxCoeff(), 1e-6);
}

TEST(Scp, OptimalGuessIsFixedPoint) {
  const BoundaryState s = rest(Vec3(0, 0, 2)), g = rest(Vec3(10, -3, 3));
  const int n = 25;
  const double dt = 0.4;
  const WaypointTrajectory guess{kkt_min_acceleration(s, g, n, dt), dt};
  ScpConfig cfg;
  cfg.scp_iterations = 1;
  const auto res = scp_refine({}, guess, s, g, cfg);
  EXPECT_LT((res.trajectory.points - guess.points).rowwise().norm().maxCoeff(), 1e-6);
}

TEST(Scp, AvoidsInflatedWallAcrossSeeds) {
  const BoundaryState s = rest(Vec3(-10, 0, 3)), g = rest(Vec3(10, 0, 3));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScpConfig cfg;
    cfg.seed = seed;
    const std::vector<UncertainCuboid> world{wall(default_bank(seed, 64))};
    const auto res = plan_scp(world, s, g, cfg, 40, 0.25);
    EXPECT_TRUE(res.success) << "seed " << seed << ": " << res.message << " min sdf " << res.min_inflated_sdf;
    const Cuboid inflated = inflate_world(world, cfg).cuboids[0];
    for (Eigen::Index r = 0; r < res.trajectory.size(); ++r) {
      EXPECT_GE(sdf(inflated, res.trajectory.points.row(r).transpose()), cfg.band.r_min * (1.0 - 1e-3))
          << "seed " << seed << " row " << r;
    }
    EXPECT_LT((res.trajectory.points.bottomRows(1).transpose() - g.position).norm(), 0.1);

    // Waypoints sliding through the wall may raise the true merit on the way;
    // the end result may not.
    ASSERT_FALSE(res.merit.empty());
    EXPECT_LE(res.merit.back(), res.merit.front() + 1e-9);

    // Boundary rows hold to solver tolerance.
    const auto& p = res.trajectory.points;
    const double dt = res.trajectory.dt;
    EXPECT_LT((p.row(0).transpose() - s.position).norm(), 1e-8);
    EXPECT_LT(((p.row(1) - p.row(0)).transpose() / dt - s.velocity).norm(), 1e-8);
    EXPECT_LT((p.row(2) - 2 * p.row(1) + p.row(0)).norm() / (dt * dt), 1e-8);
    EXPECT_LT((p.bottomRows(1).transpose() - g.position).norm(), 1e-8);
  }
}

// Straight guess steps over a 0.2 m slab between two waypoints; clearing it
// on both sides would need a 2.2 m step, past v_max * dt.
TEST(Scp, DoesNotTunnelThroughThinSlab) {
  const BoundaryState s = rest(Vec3(-10, 0, 3)), g = rest(Vec3(10, 0, 3));
  const Cuboid slab{GroundPose2D(Vec2(0, 0), 0.0), CuboidSize{6.0, 4.0, 0.2}};
  const WaypointTrajectory guess = straight_line(s.position, g.position, 40, 0.25);
  ScpConfig cfg;
  const std::vector<Cuboid> world{slab};
  const auto res = scp_refine(world, guess, s, g, cfg);
  EXPECT_TRUE(res.success) << res.message;
  const auto& p = res.trajectory.points;
  for (Eigen::Index r = 0; r + 1 < p.rows(); ++r) {
    for (int k = 0; k <= 50; ++k) {
      const Vec3 q = (p.row(r) + (p.row(r + 1) - p.row(r)) * (k / 50.0)).transpose();
      EXPECT_GT(sdf(slab, q), 0.0) << "segment " << r;
    }
  }
}

TEST(Scp, RepairLiftsGuessAboveFloor) {
  const BoundaryState s = rest(Vec3(-10, 0, 3)), g = rest(Vec3(10, 0, 3));
  WaypointTrajectory guess = straight_line(s.position, g.position, 30, 0.4);
  for (Eigen::Index r = 3; r < 27; ++r) guess.points(r, 2) = -2.0;
  ScpConfig cfg;
  const auto res = scp_refine({}, guess, s, g, cfg);
  ASSERT_FALSE(res.infeasible) << res.message;
  EXPECT_GE(res.trajectory.points.col(2).minCoeff(), cfg.limits.min_altitude - 1e-6);
}

TEST(Scp, DeterministicWithZeroBank) {
  ScpConfig cfg;
  cfg.candidates = 1;
  cfg.stomp_scale = 0.0;
  const std::vector<UncertainCuboid> world{{Cuboid{GroundPose2D({0, 3}, 0.0), CuboidSize{8, 6, 0.2}},
                                            ErrorBank::zero()}};
  const auto a = plan_scp(world, rest(Vec3(-10, 0, 3)), rest(Vec3(10, 0, 3)), cfg, 30, 0.3);
  const auto b = plan_scp(world, rest(Vec3(-10, 0, 3)), rest(Vec3(10, 0, 3)), cfg, 30, 0.3);
  EXPECT_EQ(a.trajectory.points, b.trajectory.points);
}

TEST(Scp, RejectsBadConfig) {
  ScpConfig cfg;
  cfg.inflate_quantile = 1.0;
  EXPECT_THROW(plan_scp({}, rest(Vec3::Zero()), rest(Vec3(1, 0, 0)), cfg, 10, 0.1), std::invalid_argument);
  EXPECT_THROW(plan_scp({}, rest(Vec3::Zero()), rest(Vec3(1, 0, 0)), ScpConfig{}, 3, 0.1), std::invalid_argument);
}

}  // namespace
}  // namespace mmdplan
