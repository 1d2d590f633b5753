#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmdplan/mmd.hpp"
#include "mmdplan/trajectory.hpp"
#include "mmdplan/uncertainty.hpp"

namespace mmdplan {

struct CemConfig {
  int population{64};
  int elites{8};
  int iterations{12};
  double init_std{3.0};       // meters, per free control point
  double mmd_weight{1000.0};
  SafetyBand band{};
  double cov_floor{1e-4};
  std::uint64_t seed{0};

  int degree{7};
  int eval_samples{30};
  double goal_weight{1e3};
  GridCounts counts{4, 4, 4};
  double bandwidth{0.0};      // <= 0: median heuristic over the initial mean
  double bandwidth_floor{0.5};
  double failure_tolerance{1e-3};

  void validate() const;
};

struct CemTrace {
  std::vector<double> elite_mean_cost;
  std::vector<double> best_cost;
  std::vector<double> mean_cost;
  std::vector<double> cov_trace;

  std::size_t size() const { return best_cost.size(); }
  /// `iteration,elite_mean_cost,best_cost,mean_cost,cov_trace`
  void write_csv(std::ostream& os) const;
};

/// Gaussian CEM with a diagonal covariance. The current mean is always
/// evaluated and the previous elites compete with the new draws, so the elite
/// mean cost never increases.
struct CemOptions {
  int population{64};
  int elites{8};
  int iterations{12};
  double cov_floor{1e-4};
  std::uint64_t seed{0};
};

struct CemOutcome {
  Eigen::VectorXd best;
  double best_cost{0.0};
  Eigen::VectorXd mean;
  CemTrace trace;
};

using CostFn = std::function<double(const Eigen::VectorXd&)>;

CemOutcome cem_minimize(const Eigen::VectorXd& mean0, const Eigen::VectorXd& std0, const CostFn& cost,
                        const CemOptions& opt);

struct CemResult {
  PolyTrajectory trajectory;
  CemTrace trace;
  double cost{0.0};
  bool success{false};
  std::string message;
  double min_nominal_sdf{0.0};
  double bandwidth{0.0};
};

/// Overwrites the three lowest coefficients per axis so the trajectory starts
/// at `start` (position, velocity, acceleration).
void enforce_start(PolyTrajectory& traj, const BoundaryState& start);

/// Minimum-jerk polynomial through the start state with p(T) = goal.
// Column i holds the monomial coefficients (normalized time) of the i-th
// Bernstein basis polynomial.
Eigen::MatrixXd bernstein_to_monomial(int degree);

PolyTrajectory min_jerk_to_goal(const BoundaryState& start, const Vec3& goal, double duration, int degree);

/// Cost terms used by plan_cem, exposed for diagnostics.
struct CemCostModel {
  std::vector<SampleGrid> grids;
  KernelConfig kernel;
  SafetyBand band;
  Limits limits;
  Vec3 goal;
  double goal_weight;
  double mmd_weight;
  BasisMatrices basis;

  double operator()(const PolyTrajectory& traj) const;
  double mmd(const PolyTrajectory& traj) const;
};

CemResult plan_cem(std::span<const UncertainCuboid> world, const BoundaryState& start, const Vec3& goal,
                   const Limits& limits, double duration, const CemConfig& cfg);

/// Default horizon: straight-line length / (0.6 v_max), at least 1 s.
double default_duration(const Vec3& from, const Vec3& to, const Limits& limits);

}  // namespace mmdplan
