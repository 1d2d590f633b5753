#include "mmdplan/perception.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mmdplan {

void CameraModel::validate() const {
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0) || intrinsics(1, 0) != 0.0 ||
      intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 || intrinsics(2, 2) != 1.0) {
    throw std::invalid_argument("CameraModel: intrinsics must be upper triangular with positive focal lengths");
  }
  if (width <= 0 || height <= 0) throw std::invalid_argument("CameraModel: image size must be positive");
}

Vec2 CameraModel::project(const Vec3& world) const {
  const Vec3 h = intrinsics * to_camera(world);
  return {h.x() / h.z(), h.y() / h.z()};
}

bool CameraModel::in_image(const Vec2& px) const {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= width && px.y() <= height;
}

Mat3 CameraModel::intrinsics_from_fov(double hfov_rad, int width, int height) {
  const double f = 0.5 * width / std::tan(0.5 * hfov_rad);
  Mat3 k;
  k << f, 0.0, 0.5 * width,
       0.0, f, 0.5 * height,
       0.0, 0.0, 1.0;
  return k;
}

Eigen::Isometry3d CameraModel::level_pose(const Vec3& eye, double yaw) {
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  const Vec3 right = down.cross(forward);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.linear() = r;
  pose.translation() = eye;
  return pose;
}

std::array<Vec3, 4> face_corners(const Cuboid& face) {
  const Vec3 base(face.pose.origin.x(), face.pose.origin.y(), 0.0);
  const Vec3 t = face.tangent() * (0.5 * face.size.length);
  const Vec3 up(0.0, 0.0, face.size.height);
  return {base - t, base + t, base + t + up, base - t + up};
}

bool face_visible(const Cuboid& face, const CameraModel& camera, double max_range) {
  const Vec3 eye = camera.origin();
  const Vec3 c = face.center();
  if ((c - eye).norm() > max_range) return false;
  if (face.normal().dot(eye - c) <= 0.0) return false;  // back-facing
  // Tall facades next to a level camera: test the center line at eye height.
  const Vec3 probe(c.x(), c.y(), std::clamp(eye.z(), 0.0, face.size.height));
  if (camera.to_camera(probe).z() <= 0.1) return false;
  if (!camera.in_image(camera.project(probe))) return false;
  for (const Vec3& k : face_corners(face)) {
    if (camera.to_camera(k).z() <= 0.1) return false;
  }
  return true;
}

LabeledCloud synthesize_cloud(std::span<const Cuboid> faces, const CameraModel& camera,
                              const CloudConfig& cfg, std::uint64_t seed) {
  if (!(cfg.density > 0.0)) throw std::invalid_argument("synthesize_cloud: density must be > 0");
  if (!(cfg.noise >= 0.0)) throw std::invalid_argument("synthesize_cloud: noise must be >= 0");
  camera.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vec3 eye = camera.origin();
  LabeledCloud out;
  bool any = false;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Cuboid& face = faces[f];
    if (!face_visible(face, camera, cfg.max_range)) continue;
    any = true;
    const double expected = cfg.density * face.size.length * face.size.height;
    const double whole = std::floor(expected);
    const int count = static_cast<int>(whole) + (unit(rng) < expected - whole ? 1 : 0);
    const Vec3 base(face.pose.origin.x(), face.pose.origin.y(), 0.0);
    const Vec3 t = face.tangent();
    for (int i = 0; i < count; ++i) {
      const double y = (unit(rng) - 0.5) * face.size.length;
      const double z = unit(rng) * face.size.height;
      Vec3 p = base + y * t + Vec3(0.0, 0.0, z);
      const Vec3 ray = p - eye;
      const double depth = ray.norm();
      const double eps = gauss(rng);
      if (cfg.noise > 0.0) p += eps * cfg.noise * depth / 10.0 * ray / depth;
      out.points.push_back(p);
      out.labels.push_back(static_cast<int>(f));
    }
  }
  if (!any) throw std::invalid_argument("synthesize_cloud: no face is visible from the camera");
  return out;
}

namespace {

struct Plane {
  Vec3 n;
  double d;
};

// Least-squares plane through the given points (smallest principal direction).
Plane fit_least_squares(std::span<const Vec3> pts, const std::vector<int>& idx) {
  Vec3 mean = Vec3::Zero();
  for (int i : idx) mean += pts[i];
  mean /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 n = es.eigenvectors().col(0).normalized();
  return {n, -n.dot(mean)};
}

void count_inliers(std::span<const Vec3> pts, const Plane& pl, double thr, std::vector<int>& idx,
                   double& rms) {
  idx.clear();
  double ss = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = pl.n.dot(pts[i]) + pl.d;
    if (std::abs(r) <= thr) {
      idx.push_back(static_cast<int>(i));
      ss += r * r;
    }
  }
  rms = idx.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(idx.size()));
}

bool better(std::size_t count, double rms, std::size_t best_count, double best_rms) {
  return count > best_count || (count == best_count && rms < best_rms);
}

}  // namespace

PlaneFit ransac_plane(std::span<const Vec3> points, double threshold, int iterations,
                      std::uint64_t seed, const Vec3& viewpoint) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw std::invalid_argument("ransac_plane: need at least 3 points");
  if (!(threshold > 0.0) || iterations < 1) {
    throw std::invalid_argument("ransac_plane: threshold must be > 0 and iterations >= 1");
  }
  // Collinearity: the two largest principal spreads must both be non-trivial.
  {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= n;
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const double scale = std::max(es.eigenvalues()(2), 1e-300);
    if (es.eigenvalues()(1) <= 1e-12 * scale || es.eigenvalues()(2) <= 0.0) {
      throw std::invalid_argument("ransac_plane: points are collinear");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Plane best{};
  std::vector<int> best_idx, idx;
  double best_rms = 0.0, rms = 0.0;
  bool found = false;
  for (int it = 0; it < iterations; ++it) {
    int a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const Vec3 cr = (points[b] - points[a]).cross(points[c] - points[a]);
    const double len = cr.norm();
    const double span = (points[b] - points[a]).norm() * (points[c] - points[a]).norm();
    if (!(len > 1e-12 * std::max(span, 1e-300))) continue;
    const Plane pl{cr / len, -(cr / len).dot(points[a])};
    count_inliers(points, pl, threshold, idx, rms);
    if (!found || better(idx.size(), rms, best_idx.size(), best_rms)) {
      best = pl;
      best_idx = idx;
      best_rms = rms;
      found = true;
    }
  }
  if (!found) {
    // Every random triple was degenerate; fall back to the global least-squares plane.
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    best = fit_least_squares(points, all);
    count_inliers(points, best, threshold, best_idx, best_rms);
  }
  if (best_idx.size() >= 3) {
    const Plane refined = fit_least_squares(points, best_idx);
    count_inliers(points, refined, threshold, idx, rms);
    if (!better(best_idx.size(), best_rms, idx.size(), rms)) {
      best = refined;
      best_idx = idx;
      best_rms = rms;
    }
  }
  if (best.n.dot(viewpoint) + best.d < 0.0) {
    best.n = -best.n;
    best.d = -best.d;
  }
  PlaneFit fit;
  fit.normal = best.n;
  fit.offset = best.d;
  fit.inliers = std::move(best_idx);
  fit.rms = best_rms;
  return fit;
}

std::array<Vec3, 4> back_project_corners(const PlaneFit& fit, const CameraModel& camera,
                                         const std::array<Vec2, 4>& mask_corners) {
  const Mat3 rot = camera.world_from_camera.linear();
  const Vec3 eye = camera.origin();
  // Plane in the camera frame: n_c . x + d_c = 0.
  const Vec3 n_c = rot.transpose() * fit.normal;
  const double d_c = fit.normal.dot(eye) + fit.offset;
  const Mat3 k_inv = camera.intrinsics.inverse();
  std::array<Vec3, 4> out;
  for (int i = 0; i < 4; ++i) {
    const Vec3 ray = k_inv * Vec3(mask_corners[i].x(), mask_corners[i].y(), 1.0);
    const double denom = n_c.dot(ray);
    if (std::abs(n_c.dot(ray.normalized())) <= 1e-6) {
      throw std::domain_error("back_project_corners: mask ray is parallel to the plane");
    }
    const double depth = std::abs(d_c / denom);
    out[i] = camera.world_from_camera * (depth * ray);
  }
  return out;
}

Cuboid cuboid_from_corners(const Vec3& normal, const std::array<Vec3, 4>& c, double thickness) {
  const double length = 0.5 * ((c[1] - c[0]).norm() + (c[2] - c[3]).norm());
  const double height = 0.5 * ((c[3] - c[0]).norm() + (c[2] - c[1]).norm());
  const Vec3 centroid = 0.25 * (c[0] + c[1] + c[2] + c[3]);
  return Cuboid{GroundPose2D(centroid.head<2>(), std::atan2(normal.y(), normal.x())),
                CuboidSize{length, height, thickness}};
}

EstimateResult estimate_nominal(const LabeledCloud& cloud, const CameraModel& camera,
                                std::span<const Cuboid> truth_faces, const ErrorBank& bank,
                                const EstimateConfig& cfg, double cloud_noise, std::uint64_t seed) {
  if (cloud.points.size() != cloud.labels.size()) {
    throw std::invalid_argument("estimate_nominal: points and labels differ in length");
  }
  std::map<int, std::vector<Vec3>> clusters;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) clusters[cloud.labels[i]].push_back(cloud.points[i]);

  EstimateResult res;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> px_noise(0.0, cfg.sigma_px);
  const Vec3 eye = camera.origin();
  for (auto& [label, pts] : clusters) {
    if (label < 0 || static_cast<std::size_t>(label) >= truth_faces.size()) {
      throw std::invalid_argument("estimate_nominal: label does not refer to a face");
    }
    // Draw the pixel noise first so every label consumes the same stream length.
    std::array<Vec2, 4> mask;
    const auto truth_corners = face_corners(truth_faces[label]);
    for (int i = 0; i < 4; ++i) {
      mask[i] = camera.project(truth_corners[i]);
      if (cfg.sigma_px > 0.0) {
        mask[i].x() += px_noise(rng);
        mask[i].y() += px_noise(rng);
      }
    }
    const std::uint64_t face_seed = rng();
    if (pts.size() < 3) {
      res.skipped.push_back(label);
      continue;
    }
    std::vector<double> depths;
    depths.reserve(pts.size());
    for (const auto& p : pts) depths.push_back((p - eye).norm());
    std::nth_element(depths.begin(), depths.begin() + depths.size() / 2, depths.end());
    const double thr = cfg.ransac_threshold + cfg.ransac_noise_factor * cloud_noise * depths[depths.size() / 2] / 10.0;
    try {
      PlaneFit fit = ransac_plane(pts, thr, cfg.ransac_iterations, face_seed, eye);
      fit.corners = back_project_corners(fit, camera, mask);
      const Cuboid nominal = cuboid_from_corners(fit.normal, fit.corners, cfg.facade_thickness);
      if (!nominal.size.valid()) {
        res.skipped.push_back(label);
        continue;
      }
      res.nominals.push_back({label, UncertainCuboid{nominal, bank}, std::move(fit)});
    } catch (const std::invalid_argument&) {
      res.skipped.push_back(label);
    } catch (const std::domain_error&) {
      res.skipped.push_back(label);
    }
  }
  return res;
}

}  // namespace mmdplan
