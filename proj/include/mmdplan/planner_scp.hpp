#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmdplan/geometry.hpp"
#include "mmdplan/mmd.hpp"
#include "mmdplan/trajectory.hpp"
#include "mmdplan/uncertainty.hpp"

namespace mmdplan {

struct ScpConfig {
  int candidates{64};
  int scp_iterations{20};
  double trust_radius{2.0};       // meters, per coordinate
  double inflate_quantile{0.95};
  bool inflate{true};
  SafetyBand band{};
  Limits limits{};
  std::uint64_t seed{0};

  double stomp_scale{5.0};        // peak per-waypoint std of the STOMP noise, meters
  GridCounts counts{4, 4, 4};
  double bandwidth_floor{0.5};
  double penalty{1e3};            // slack / merit weight
  double fd_step{1e-4};
  double move_tolerance{1e-4};
  double max_trust_radius{10.0};

  void validate() const;
};

struct InflatedWorld {
  std::vector<Cuboid> cuboids;
};

/// Per-face bounding of sampled vertex excursions in the nominal body frame.
/// The per-face level starts at `quantile` and is raised until the box holds
/// every vertex of a q + (1 - q) / 2 fraction of the training realizations.
/// The bottom stays on the ground.
Cuboid inflate(const UncertainCuboid& u, double quantile, GridCounts counts, std::uint64_t seed);

/// Realizations drawn by inflate(); at least 8000 regardless of counts.
int inflation_sample_count(GridCounts counts);

InflatedWorld inflate_world(std::span<const UncertainCuboid> world, const ScpConfig& cfg);

/// Candidate 0 is the straight line; the rest are STOMP perturbations of it.
/// Lowest MMD wins, then lower smoothness, then lower index.
struct RankedInit {
  WaypointTrajectory trajectory;
  int index{0};
  std::vector<double> mmd;  // per candidate
  double bandwidth{0.0};
};

RankedInit mmd_rank_init(std::span<const UncertainCuboid> world, const Vec3& start, const Vec3& goal,
                         int n_waypoints, double dt, const ScpConfig& cfg);

struct ScpResult {
  WaypointTrajectory trajectory;
  WaypointTrajectory initial;
  bool success{false};
  bool infeasible{false};
  std::string message;
  int iterations{0};
  // scp_merit of the repaired guess and of every accepted iterate. Steps are
  // judged on a per-iteration model, so this need not fall monotonically.
  std::vector<double> merit;
  double min_inflated_sdf{0.0};
};

/// Acceleration cost plus penalty * sum of max(r_min - d, 0) over the movable
/// waypoints, with d the signed distance to each cuboid.
double scp_merit(const WaypointTrajectory& traj, std::span<const Cuboid> world, const ScpConfig& cfg);

/// SCP from a given initial guess against a deterministic world.
ScpResult scp_refine(std::span<const Cuboid> world, const WaypointTrajectory& init, const BoundaryState& start,
                     const BoundaryState& goal, const ScpConfig& cfg);

ScpResult plan_scp(std::span<const UncertainCuboid> world, const BoundaryState& start, const BoundaryState& goal,
                   const ScpConfig& cfg, int n_waypoints, double dt);

}  // namespace mmdplan
