#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mmdplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Planar pose of a vertical facade: ground-plane origin and yaw of the
/// facade normal measured from the world x-axis.
struct GroundPose2D {
  Vec2 origin{Vec2::Zero()};
  double yaw{0.0};

  GroundPose2D() = default;
  GroundPose2D(Vec2 o, double psi) : origin(std::move(o)), yaw(wrap_angle(psi)) {}
};

/// Extents of a facade cuboid. `length` runs along the facade tangent,
/// `height` is vertical and `thickness` runs along the normal.
struct CuboidSize {
  double length{1.0};
  double height{1.0};
  double thickness{0.2};

  bool valid() const { return length > 0.0 && height > 0.0 && thickness > 0.0; }
};

/// Vertical cuboid resting on the ground plane (z = 0). The volumetric center
/// sits at (origin.x, origin.y, height / 2).
struct Cuboid {
  GroundPose2D pose;
  CuboidSize size;

  Vec3 center() const { return {pose.origin.x(), pose.origin.y(), 0.5 * size.height}; }
  Vec3 half_extents() const {
    return {0.5 * size.thickness, 0.5 * size.length, 0.5 * size.height};
  }
  /// Unit outward normal of the +x body face, in the world frame.
  Vec3 normal() const;
  /// Unit tangent (body +y axis) in the world frame.
  Vec3 tangent() const;
  std::array<Vec3, 8> vertices() const;
};

/// Rigid world-to-body transform of a cuboid. The body frame has x along the
/// facade normal, y along the tangent, z up, origin at the volumetric center.
struct LocalTransform {
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};

  Vec3 apply(const Vec3& q) const { return rotation * q + translation; }
  LocalTransform inverse() const;
};

LocalTransform local_transform(const Cuboid& c);

/// Unsigned exterior distance: ||max(|T q| - h, 0)||, zero on or inside.
double sdf(const Cuboid& c, const Vec3& q);

/// Same as sdf() outside; inside returns minus the depth to the nearest face.
double signed_distance(const Cuboid& c, const Vec3& q);

/// Row-major distance matrix: result[ci * queries.size() + qi].
std::vector<double> sdf_batch(std::span<const Cuboid> cuboids, std::span<const Vec3> queries);

/// Minimum of sdf() over a set of cuboids; +inf for an empty set.
double min_sdf(std::span<const Cuboid> cuboids, const Vec3& q);

/// Minimum sdf over `cuboids` for every query; +inf entries for an empty set.
std::vector<double> min_sdf_batch(std::span<const Cuboid> cuboids, std::span<const Vec3> queries);

/// Cuboid with cached trigonometry for repeated distance queries.
struct PackedCuboid {
  double cx, cy, cz;
  double cos_yaw, sin_yaw;
  double hx, hy, hz;

  explicit PackedCuboid(const Cuboid& c);
  double distance(const Vec3& q) const;
};

/// True when every vertex of `inner` lies inside `outer` (within tol meters).
bool contains_all_vertices(const Cuboid& outer, const Cuboid& inner, double tol = 1e-9);

}  // namespace mmdplan
