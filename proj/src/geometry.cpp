#include "mmdplan/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mmdplan {

double wrap_angle(double a) {
  a = std::atan2(std::sin(a), std::cos(a));
  // atan2 returns [-pi, pi]; fold -pi onto +pi.
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Vec3 Cuboid::normal() const {
  return {std::cos(pose.yaw), std::sin(pose.yaw), 0.0};
}

Vec3 Cuboid::tangent() const {
  return {-std::sin(pose.yaw), std::cos(pose.yaw), 0.0};
}

std::array<Vec3, 8> Cuboid::vertices() const {
  const Vec3 c = center();
  const Vec3 h = half_extents();
  const Vec3 n = normal();
  const Vec3 t = tangent();
  std::array<Vec3, 8> out;
  int idx = 0;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        out[idx++] = c + sx * h.x() * n + sy * h.y() * t + Vec3(0, 0, sz * h.z());
      }
    }
  }
  return out;
}

LocalTransform LocalTransform::inverse() const {
  LocalTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.rotation * translation;
  return inv;
}

LocalTransform local_transform(const Cuboid& c) {
  // rotation = Rz(yaw)^T so that the world normal (cos yaw, sin yaw, 0) maps to +x.
  const double cy = std::cos(c.pose.yaw);
  const double sy = std::sin(c.pose.yaw);
  LocalTransform t;
  t.rotation << cy, sy, 0.0,
               -sy, cy, 0.0,
                0.0, 0.0, 1.0;
  t.translation = -t.rotation * c.center();
  return t;
}

namespace {

inline Vec3 to_local(const Cuboid& c, const Vec3& q) {
  const double cy = std::cos(c.pose.yaw);
  const double sy = std::sin(c.pose.yaw);
  const double dx = q.x() - c.pose.origin.x();
  const double dy = q.y() - c.pose.origin.y();
  return {cy * dx + sy * dy, -sy * dx + cy * dy, q.z() - 0.5 * c.size.height};
}

}  // namespace

double sdf(const Cuboid& c, const Vec3& q) { return PackedCuboid(c).distance(q); }

double signed_distance(const Cuboid& c, const Vec3& q) {
  const Vec3 local = to_local(c, q);
  const Vec3 d = local.cwiseAbs() - c.half_extents();
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(d.maxCoeff(), 0.0);
  return outside + inside;
}

std::vector<double> sdf_batch(std::span<const Cuboid> cuboids, std::span<const Vec3> queries) {
  if (cuboids.empty() || queries.empty()) {
    throw std::invalid_argument("sdf_batch: empty cuboid or query list");
  }
  std::vector<double> out(cuboids.size() * queries.size());
  for (std::size_t ci = 0; ci < cuboids.size(); ++ci) {
    double* row = out.data() + ci * queries.size();
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      row[qi] = sdf(cuboids[ci], queries[qi]);
    }
  }
  return out;
}

double min_sdf(std::span<const Cuboid> cuboids, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cuboids) best = std::min(best, sdf(c, q));
  return best;
}

PackedCuboid::PackedCuboid(const Cuboid& c)
    : cx(c.pose.origin.x()),
      cy(c.pose.origin.y()),
      cz(0.5 * c.size.height),
      cos_yaw(std::cos(c.pose.yaw)),
      sin_yaw(std::sin(c.pose.yaw)),
      hx(0.5 * c.size.thickness),
      hy(0.5 * c.size.length),
      hz(0.5 * c.size.height) {}

double PackedCuboid::distance(const Vec3& q) const {
  const double dx = q.x() - cx;
  const double dy = q.y() - cy;
  const double ex = std::max(std::abs(cos_yaw * dx + sin_yaw * dy) - hx, 0.0);
  const double ey = std::max(std::abs(-sin_yaw * dx + cos_yaw * dy) - hy, 0.0);
  const double ez = std::max(std::abs(q.z() - cz) - hz, 0.0);
  return std::sqrt(ex * ex + ey * ey + ez * ez);
}

std::vector<double> min_sdf_batch(std::span<const Cuboid> cuboids, std::span<const Vec3> queries) {
  std::vector<PackedCuboid> packed(cuboids.begin(), cuboids.end());
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Vec3& q = queries[i];
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : packed) {
      const double dx = q.x() - c.cx;
      const double dy = q.y() - c.cy;
      const double ex = std::max(std::abs(c.cos_yaw * dx + c.sin_yaw * dy) - c.hx, 0.0);
      const double ey = std::max(std::abs(-c.sin_yaw * dx + c.cos_yaw * dy) - c.hy, 0.0);
      const double ez = std::max(std::abs(q.z() - c.cz) - c.hz, 0.0);
      best = std::min(best, ex * ex + ey * ey + ez * ez);
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

bool contains_all_vertices(const Cuboid& outer, const Cuboid& inner, double tol) {
  const Vec3 h = outer.half_extents();
  for (const Vec3& v : inner.vertices()) {
    const Vec3 local = to_local(outer, v).cwiseAbs();
    if ((local.array() > h.array() + tol).any()) return false;
  }
  return true;
}

}  // namespace mmdplan
