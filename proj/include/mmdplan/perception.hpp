#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "mmdplan/geometry.hpp"
#include "mmdplan/uncertainty.hpp"

namespace mmdplan {

/// Pinhole camera. Camera frame: +z optical axis, +x right, +y down.
struct CameraModel {
  Mat3 intrinsics{Mat3::Identity()};
  int width{640};
  int height{480};
  Eigen::Isometry3d world_from_camera{Eigen::Isometry3d::Identity()};

  void validate() const;
  Vec3 origin() const { return world_from_camera.translation(); }
  /// Camera-frame coordinates of a world point.
  Vec3 to_camera(const Vec3& world) const { return world_from_camera.inverse() * world; }
  /// Pixel (u, v) of a world point; the point must be in front of the camera.
  Vec2 project(const Vec3& world) const;
  bool in_image(const Vec2& px) const;

  /// Symmetric intrinsics from a horizontal field of view.
  static Mat3 intrinsics_from_fov(double hfov_rad, int width, int height);
  /// Camera at `eye` looking horizontally along `yaw` (world z up).
  static Eigen::Isometry3d level_pose(const Vec3& eye, double yaw);
};

struct LabeledCloud {
  std::vector<Vec3> points;
  std::vector<int> labels;
};

struct PlaneFit {
  Vec3 normal{Vec3::UnitZ()};
  double offset{0.0};  // n . x + offset = 0
  std::vector<int> inliers;
  std::array<Vec3, 4> corners{};
  double rms{0.0};
};

struct CloudConfig {
  double noise{0.5};      // along-ray std (m) at 10 m depth, scales linearly with depth
  double density{0.5};    // points per m^2
  double max_range{80.0}; // faces farther than this (center distance) are not sensed
};

/// Faces are thin cuboids; the plane is the body x = 0 mid-plane. A face is
/// visible when it is in range, front-facing, has every corner in front of the
/// camera and its center line at eye height projects into the image.
bool face_visible(const Cuboid& face, const CameraModel& camera, double max_range);

/// Points on the visible faces; label = index into `faces`.
LabeledCloud synthesize_cloud(std::span<const Cuboid> faces, const CameraModel& camera,
                              const CloudConfig& cfg, std::uint64_t seed);

/// Four face corners on the mid-plane: bottom-left, bottom-right, top-right, top-left
/// (left/right along the body -y/+y axis).
std::array<Vec3, 4> face_corners(const Cuboid& face);

/// `viewpoint` orients the normal toward it.
PlaneFit ransac_plane(std::span<const Vec3> points, double threshold, int iterations,
                      std::uint64_t seed, const Vec3& viewpoint = Vec3::Zero());

/// Intersects each mask-corner ray with the fitted plane.
std::array<Vec3, 4> back_project_corners(const PlaneFit& fit, const CameraModel& camera,
                                         const std::array<Vec2, 4>& mask_corners);

struct EstimateConfig {
  double sigma_px{2.0};
  double ransac_threshold{0.15};
  /// Added to the threshold per meter of median point depth, times the cloud noise / 10.
  double ransac_noise_factor{2.5};
  int ransac_iterations{100};
  double facade_thickness{0.2};
};

struct NominalEstimate {
  int label;
  UncertainCuboid estimate;
  PlaneFit fit;
};

struct EstimateResult {
  std::vector<NominalEstimate> nominals;
  std::vector<int> skipped;  // labels with fewer than 3 points or degenerate geometry
};

/// Per-label RANSAC + noisy mask corners (projected truth faces) + back-projection.
/// `cloud_noise` is the CloudConfig noise used to synthesize the cloud.
EstimateResult estimate_nominal(const LabeledCloud& cloud, const CameraModel& camera,
                                std::span<const Cuboid> truth_faces, const ErrorBank& bank,
                                const EstimateConfig& cfg, double cloud_noise, std::uint64_t seed);

/// Nominal cuboid from a plane normal and four back-projected corners.
Cuboid cuboid_from_corners(const Vec3& normal, const std::array<Vec3, 4>& corners, double thickness);

}  // namespace mmdplan
