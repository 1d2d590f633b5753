#include "mmdplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

namespace mmdplan {
namespace {

Cuboid make_cuboid(double x, double y, double yaw, double length, double height, double thickness) {
  return Cuboid{GroundPose2D({x, y}, yaw), CuboidSize{length, height, thickness}};
}

Cuboid random_cuboid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-10.0, 10.0), ext(0.2, 8.0), yaw(-3.1, 3.1);
  return make_cuboid(pos(rng), pos(rng), yaw(rng), ext(rng), ext(rng), ext(rng));
}

// Face-sampling oracle: nearest of res x res points on each of the six faces,
// built from the world-frame vertices only. Inside-ness is decided by the six
// face half-spaces.
struct FaceOracle {
  double spacing{0.0};

  double operator()(const Cuboid& c, const Vec3& q, int res) {
    const auto v = c.vertices();  // index = sx*4 + sy*2 + sz, s in {0,1}
    auto vert = [&](int sx, int sy, int sz) { return v[sx * 4 + sy * 2 + sz]; };
    // Each face: origin corner plus two edge vectors.
    struct Face { Vec3 o, e1, e2; };
    std::vector<Face> faces;
    for (int s : {0, 1}) {
      faces.push_back({vert(s, 0, 0), vert(s, 1, 0) - vert(s, 0, 0), vert(s, 0, 1) - vert(s, 0, 0)});
      faces.push_back({vert(0, s, 0), vert(1, s, 0) - vert(0, s, 0), vert(0, s, 1) - vert(0, s, 0)});
      faces.push_back({vert(0, 0, s), vert(1, 0, s) - vert(0, 0, s), vert(0, 1, s) - vert(0, 0, s)});
    }
    bool inside = true;
    const Vec3 centroid = c.center();
    for (const auto& f : faces) {
      Vec3 n = f.e1.cross(f.e2).normalized();
      if (n.dot(centroid - f.o) > 0) n = -n;  // outward
      if (n.dot(q - f.o) > 0) inside = false;
    }
    spacing = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : faces) {
      spacing = std::max(spacing, std::hypot(f.e1.norm(), f.e2.norm()) / (res - 1));
      for (int a = 0; a < res; ++a) {
        for (int b = 0; b < res; ++b) {
          const Vec3 p = f.o + f.e1 * (double(a) / (res - 1)) + f.e2 * (double(b) / (res - 1));
          best = std::min(best, (p - q).squaredNorm());
        }
      }
    }
    return inside ? 0.0 : std::sqrt(best);
  }
};

TEST(LocalTransform, ZeroYawCentersVertically) {
  const Cuboid c = make_cuboid(0, 0, 0, 3, 2, 0.2);
  const LocalTransform t = local_transform(c);
  EXPECT_TRUE(t.rotation.isApprox(Mat3::Identity(), 1e-15));
  EXPECT_TRUE(t.translation.isApprox(Vec3(0, 0, -1), 1e-15));
}

TEST(LocalTransform, QuarterTurnMapsNormalToX) {
  const Cuboid c = make_cuboid(0, 0, std::numbers::pi / 2, 3, 2, 0.2);
  const LocalTransform t = local_transform(c);
  Mat3 expected;
  expected << 0, 1, 0,
             -1, 0, 0,
              0, 0, 1;
  EXPECT_TRUE(t.rotation.isApprox(expected, 1e-12)) << t.rotation;
  EXPECT_TRUE(t.apply(Vec3(0, 5, 1)).isApprox(Vec3(5, 0, 0), 1e-12));
}

TEST(LocalTransform, CenterMapsToOriginAndRotationIsProper) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Cuboid c = random_cuboid(rng);
    const LocalTransform t = local_transform(c);
    EXPECT_LT(t.apply(c.center()).norm(), 1e-9);
    EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-9);
    EXPECT_TRUE((t.rotation * t.rotation.transpose()).isApprox(Mat3::Identity(), 1e-9));
    const Vec3 q(1.5, -2.0, 3.0);
    EXPECT_LT((t.inverse().apply(t.apply(q)) - q).norm(), 1e-12);
  }
}

TEST(Sdf, InteriorIsZero) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.999, 0.999);
  for (int i = 0; i < 200; ++i) {
    const Cuboid c = random_cuboid(rng);
    const Vec3 h = c.half_extents();
    const Vec3 q = c.center() + u(rng) * h.x() * c.normal() + u(rng) * h.y() * c.tangent() +
                   Vec3(0, 0, u(rng) * h.z());
    EXPECT_EQ(sdf(c, q), 0.0);
    EXPECT_LT(signed_distance(c, q), 0.0);
  }
  const Cuboid c = make_cuboid(1, 1, 0.3, 2, 2, 2);
  EXPECT_EQ(sdf(c, c.center()), 0.0);
}

TEST(Sdf, FaceNormalOffset) {
  const Cuboid c = make_cuboid(0, 0, 0, 2, 2, 2);
  EXPECT_DOUBLE_EQ(sdf(c, Vec3(3, 0, 1)), 2.0);
  EXPECT_DOUBLE_EQ(signed_distance(c, Vec3(3, 0, 1)), 2.0);
  EXPECT_DOUBLE_EQ(signed_distance(c, Vec3(0.5, 0, 1)), -0.5);
}

TEST(Sdf, MatchesFaceSamplingOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> qd(-20.0, 20.0), qz(-5.0, 15.0);
  FaceOracle oracle;
  constexpr int kRes = 200;
  for (int i = 0; i < 200; ++i) {
    const Cuboid c = random_cuboid(rng);
    const Vec3 q(qd(rng), qd(rng), qz(rng));
    const double expected = oracle(c, q, kRes);
    const double got = sdf(c, q);
    // The oracle overestimates by at most half a sample diagonal.
    EXPECT_NEAR(got, expected, 2.0 * oracle.spacing + 1e-6) << "case " << i;
    EXPECT_LE(got, expected + 1e-6);
  }
}

TEST(Sdf, IsOneLipschitz) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> qd(-15.0, 15.0), step(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const Cuboid c = random_cuboid(rng);
    const Vec3 q1(qd(rng), qd(rng), qd(rng));
    const Vec3 q2 = q1 + Vec3(step(rng), step(rng), step(rng));
    EXPECT_LE(std::abs(sdf(c, q1) - sdf(c, q2)), (q1 - q2).norm() + 1e-12);
    EXPECT_GE(sdf(c, q1), 0.0);
  }
}

TEST(Sdf, InvariantUnderPlanarRigidMotion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> qd(-15.0, 15.0), ang(-3.14, 3.14);
  for (int i = 0; i < 1000; ++i) {
    const Cuboid c = random_cuboid(rng);
    const Vec3 q(qd(rng), qd(rng), qd(rng));
    const double th = ang(rng);
    const Vec2 shift(qd(rng), qd(rng));
    const Eigen::Rotation2Dd rot(th);
    Cuboid moved = c;
    moved.pose = GroundPose2D(rot * c.pose.origin + shift, c.pose.yaw + th);
    const Vec2 qxy = rot * q.head<2>() + shift;
    const Vec3 qm(qxy.x(), qxy.y(), q.z());
    EXPECT_NEAR(sdf(c, q), sdf(moved, qm), 1e-9);
  }
}

TEST(SdfBatch, DegenerateAndPermutation) {
  const std::vector<Cuboid> cs{make_cuboid(0, 0, 0.4, 3, 5, 0.2)};
  const std::vector<Vec3> one{Vec3(4, 1, 2)};
  const auto m = sdf_batch(cs, one);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], sdf(cs[0], one[0]));

  std::vector<Vec3> qs{Vec3(1, 2, 3), Vec3(-4, 0, 1), Vec3(7, 7, 7)};
  std::vector<Vec3> perm{qs[2], qs[0], qs[1]};
  const auto a = sdf_batch(cs, qs);
  const auto b = sdf_batch(cs, perm);
  EXPECT_EQ(b[0], a[2]);
  EXPECT_EQ(b[1], a[0]);
  EXPECT_EQ(b[2], a[1]);

  EXPECT_THROW(sdf_batch(std::vector<Cuboid>{}, qs), std::invalid_argument);
  EXPECT_THROW(sdf_batch(cs, std::vector<Vec3>{}), std::invalid_argument);
}

TEST(SdfBatch, BitIdenticalToScalarLoop) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> qd(-15.0, 15.0);
  std::vector<Cuboid> cs;
  std::vector<Vec3> qs;
  for (int i = 0; i < 50; ++i) {
    cs.push_back(random_cuboid(rng));
    qs.emplace_back(qd(rng), qd(rng), qd(rng));
  }
  const auto m = sdf_batch(cs, qs);
  for (std::size_t c = 0; c < cs.size(); ++c) {
    for (std::size_t q = 0; q < qs.size(); ++q) EXPECT_EQ(m[c * qs.size() + q], sdf(cs[c], qs[q]));
  }
}

TEST(Pose, YawIsWrapped) {
  const GroundPose2D p({0, 0}, 3 * std::numbers::pi);
  EXPECT_NEAR(p.yaw, std::numbers::pi, 1e-12);
  EXPECT_GT(wrap_angle(-std::numbers::pi), 0.0);
  EXPECT_NEAR(wrap_angle(6.2), 6.2 - 2 * std::numbers::pi, 1e-12);
}

TEST(Containment, VertexTest) {
  const Cuboid outer = make_cuboid(0, 0, 0.2, 10, 10, 2);
  const Cuboid inner = make_cuboid(0.1, 0.1, 0.2, 5, 5, 1);
  EXPECT_TRUE(contains_all_vertices(outer, inner));
  EXPECT_FALSE(contains_all_vertices(inner, outer));
}

}  // namespace
}  // namespace mmdplan
