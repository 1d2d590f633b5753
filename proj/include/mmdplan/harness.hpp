#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmdplan/scenario.hpp"

namespace mmdplan {

enum class PlannerKind { Cem, Scp, Det };

const char* planner_name(PlannerKind p);
/// "cem", "scp" or "det"; throws std::invalid_argument otherwise.
PlannerKind parse_planner(const std::string& name);

struct RunMetrics {
  bool success{false};
  bool reached_goal{false};
  double smoothness{0.0};        // m^2/s^5 (cem) or m^2/s^3 (scp, det)
  double compute_seconds{0.0};   // wall time spent in perception + planning
  double traversed_length{0.0};  // meters, up to the first collision or failure
  double min_gt_clearance{0.0};  // signed, against the solid buildings
  int replans{0};
  int audit_flags{0};            // plans whose own safety audit failed
  std::string message;
};

/// Executed states, one row per exported sample.
struct ExecutedPath {
  std::vector<double> t;
  std::vector<Vec3> position, velocity, acceleration;

  void write_csv(std::ostream& os) const;
};

struct TrialResult {
  RunMetrics metrics;
  ExecutedPath path;
  std::vector<CemTrace> cem_traces;  // one per cem planning call
};

/// Receding-horizon trial: perceive, plan, execute replan_interval seconds,
/// repeat until the goal is within tolerance or the budget runs out. Every
/// executed sample is audited against the ground-truth buildings. Perception
/// and planner errors end the trial unsuccessfully; they are not rethrown.
/// `bank` overrides the scenario's bank when non-null.
TrialResult run_trial(const Scenario& scenario, PlannerKind planner, std::uint64_t seed,
                      const ErrorBank* bank = nullptr);

struct BenchOptions {
  std::vector<PlannerKind> planners{PlannerKind::Cem, PlannerKind::Scp, PlannerKind::Det};
  int n_seeds{30};
  std::uint64_t first_seed{0};
  bool timing{false};  // compute time makes the table machine dependent
};

struct BenchRow {
  std::string scenario;
  PlannerKind planner;
  int trials{0};
  int successes{0};
  double smoothness_mean{0.0}, smoothness_std{0.0};
  double compute_mean{0.0}, compute_std{0.0};
  double length_mean{0.0}, length_std{0.0};
  double clearance_mean{0.0}, clearance_std{0.0};

  double success_pct() const { return trials > 0 ? 100.0 * successes / trials : 0.0; }
};

struct BenchTable {
  std::vector<BenchRow> rows;
  bool timing{false};
  /// Trial metrics in (scenario, planner, seed) order.
  std::vector<RunMetrics> trials;
};

/// One row per (scenario, planner); trials run concurrently across seeds.
BenchTable benchmark(const std::vector<Scenario>& scenarios, const BenchOptions& opt);

/// CSV: scenario,planner,trials,success_pct,smoothness_mean,smoothness_std,
/// compute_mean_s,compute_std_s,length_mean_m,length_std_m,min_clearance_mean_m,min_clearance_std_m.
void write_bench_table(std::ostream& os, const BenchTable& t);

std::string metrics_to_json(const RunMetrics& m, PlannerKind planner, std::uint64_t seed);

/// Buildings within `radius` meters (ground distance to the footprint) of the
/// start-goal chord midpoint; keeps voxel grids of a city scene under the cap.
std::vector<Cuboid> query_window(const Scenario& scenario, double radius);

struct CalibrateOptions {
  int n_seeds{20};
  int viewpoints{5};  // along the start-goal chord
  std::uint64_t first_seed{0};
};

/// Runs the perception front end from viewpoints along the start-goal chord and
/// pools (estimate, truth) facade pairs into a bank. Segmentation error is not
/// injected here; the bank measures the geometric pipeline alone.
ErrorBank calibrate(const Scenario& scenario, const CalibrateOptions& opt);

}  // namespace mmdplan
