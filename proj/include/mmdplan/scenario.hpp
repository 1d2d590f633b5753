#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmdplan/geometry.hpp"
#include "mmdplan/mmd.hpp"
#include "mmdplan/perception.hpp"
#include "mmdplan/planner_cem.hpp"
#include "mmdplan/planner_scp.hpp"
#include "mmdplan/trajectory.hpp"
#include "mmdplan/uncertainty.hpp"

namespace mmdplan {

/// Where a scenario's error bank comes from.
struct BankSource {
  enum class Kind { Default, Zero, File };
  Kind kind{Kind::Default};
  std::uint64_t seed{0};  // Default
  int size{500};          // Default
  std::string path;       // File, relative paths resolve against the scenario file
};

/// Camera carried by the vehicle; it sits at the vehicle position and looks
/// horizontally toward the goal.
struct CameraConfig {
  double hfov{2.0943951023931957};  // 120 deg
  int width{640};
  int height{480};

  CameraModel at(const Vec3& eye, double yaw) const;
};

struct PerceptionConfig {
  CloudConfig cloud{};
  EstimateConfig estimate{};
  /// Per face and trial, one bank draw is subtracted from the fitted estimate,
  /// standing in for mask segmentation error (truth = estimate + draw).
  bool segmentation_error{true};
};

struct TrialConfig {
  double replan_interval{2.0};  // seconds of executed trajectory per plan
  double goal_tolerance{0.5};
  int max_replans{60};
  double audit_dt{0.05};        // ground-truth clearance sampling step
  double waypoint_dt{0.25};     // scp / det; replan_interval must be a multiple
  double cem_export_dt{0.1};
  double min_duration{2.0};
};

struct PlannerConfigs {
  CemConfig cem{};
  ScpConfig scp{};
  PerceptionConfig perception{};
  TrialConfig trial{};
};

struct Scenario {
  std::string name{"scenario"};
  std::vector<Cuboid> buildings;  // solid ground-truth blocks
  BoundaryState start{};
  Vec3 goal{Vec3::Zero()};
  Limits limits{};
  SafetyBand band{1.0, 1000.0};
  BankSource bank_ref{};
  CameraConfig camera{};
  std::uint64_t rng_seed{0};
  PlannerConfigs config{};
  std::string source_dir{"."};  // set by load_scenario; not serialized

  /// Throws std::invalid_argument on bad fields or a start / goal within
  /// r_min of a building.
  void validate() const;
};

/// The four side walls of a building as thin facades (outward normals).
/// Face 4b + k of a scenario belongs to building b.
std::vector<Cuboid> building_faces(const Cuboid& building, double thickness);
std::vector<Cuboid> scenario_faces(const Scenario& s);

struct StreetParams {
  int n_buildings{47};
  double area{160000.0};  // m^2, square
  double street_width{20.0};
  double min_height{20.0}, max_height{80.0};
  double min_footprint{8.0}, max_footprint{25.0};
  double max_setback{6.0};
  double min_gap{1.0};
  double flight_height{5.0};
  double corner_clip{3.0};  // how far the start-goal chord cuts into the corner lot
  int max_attempts{500};
};

/// Buildings in rows on both sides of a square street loop; corner lots are
/// placed first. Start and goal sit on the street centerline either side of
/// the south-east corner. Throws std::runtime_error when placement fails.
Scenario generate_square_street(std::uint64_t seed, const StreetParams& params = {});

/// Structured text I/O.
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

std::string bank_to_json(const ErrorBank& b);
ErrorBank bank_from_json(const std::string& text);
void save_bank(const ErrorBank& b, const std::string& path);
ErrorBank load_bank(const std::string& path);

/// Merge-patches planner / perception / trial settings from a config file
/// (same schema as the scenario's "config" object).
void apply_config_json(Scenario& s, const std::string& text);
std::string config_to_json(const PlannerConfigs& c);

/// Bank named by the scenario; relative file paths resolve against source_dir.
ErrorBank resolve_bank(const Scenario& s);

}  // namespace mmdplan
