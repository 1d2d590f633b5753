#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mmdplan/geometry.hpp"

namespace mmdplan {

struct Limits {
  double v_max{5.0};
  double a_max{3.0};
  double min_altitude{1.0};  // meters; the ground is an obstacle too
};

struct BoundaryState {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};
  Vec3 acceleration{Vec3::Zero()};
};

/// Per-axis monomial coefficients on normalized time s = t / duration.
struct PolyTrajectory {
  Eigen::VectorXd cx, cy, cz;
  double duration{1.0};
  int degree{7};

  void validate() const;
  const Eigen::VectorXd& axis(int a) const { return a == 0 ? cx : (a == 1 ? cy : cz); }
  Eigen::VectorXd& axis(int a) { return a == 0 ? cx : (a == 1 ? cy : cz); }
};

/// Waypoints sampled every dt seconds; row r is the position at t = r * dt.
struct WaypointTrajectory {
  Eigen::MatrixX3d points;
  double dt{0.1};

  void validate() const;
  Eigen::Index size() const { return points.rows(); }
  double duration() const { return dt * static_cast<double>(points.rows() - 1); }
  /// Forward differences; the last row repeats the backward difference.
  Eigen::MatrixX3d velocities() const;
  /// Central second differences; first/last rows are one-sided.
  Eigen::MatrixX3d accelerations() const;
  BoundaryState state_at(Eigen::Index row) const;
};

/// Basis matrices on normalized time: P, its first, second and third time
/// derivatives. Row r corresponds to times[r].
struct BasisMatrices {
  Eigen::MatrixXd p, pd, pdd, pddd;
};

BasisMatrices basis_matrices(std::span<const double> times, int degree, double duration);

struct TrajectorySamples {
  Eigen::MatrixX3d position, velocity, acceleration, jerk;
};

TrajectorySamples eval(const PolyTrajectory& traj, std::span<const double> times);
TrajectorySamples eval(const PolyTrajectory& traj, const BasisMatrices& basis);
BoundaryState state_at(const PolyTrajectory& traj, double t);

/// `count` evenly spaced times covering [0, duration] inclusive.
std::vector<double> uniform_times(double duration, int count);

/// Exact Gram matrix of the squared-jerk integral over [0, duration].
Eigen::MatrixXd jerk_gram(int degree, double duration);

/// Integral of squared jerk (m^2/s^5).
double smoothness_cost(const PolyTrajectory& traj);
/// Sum over interior rows of squared central-difference acceleration times dt (m^2/s^3).
double smoothness_cost(const WaypointTrajectory& traj);

/// Squared per-axis exceedance of the velocity and acceleration limits.
double limit_penalty(const PolyTrajectory& traj, const Limits& limits, std::span<const double> times);
double limit_penalty(const TrajectorySamples& samples, const Limits& limits);

/// Straight line with n waypoints from `from` to `to`.
WaypointTrajectory straight_line(const Vec3& from, const Vec3& to, int n, double dt);

/// Cached Cholesky factor of the interior block of R^-1, R = A^T A with A the
/// second-difference operator scaled by 1/dt^2. Endpoints carry no noise.
class StompNoise {
 public:
  StompNoise(int n, double dt);

  int waypoints() const { return n_; }
  double dt() const { return dt_; }
  /// Covariance of the interior noise for unit scale: R_int^-1.
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  /// The (n-2) x n second-difference operator divided by dt^2.
  Eigen::MatrixXd second_difference() const;

  static std::shared_ptr<const StompNoise> cached(int n, double dt);

 private:
  int n_;
  double dt_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

/// k copies of `base` perturbed per axis by scale * L z, z ~ N(0, I).
std::vector<WaypointTrajectory> stomp_samples(const WaypointTrajectory& base, int k, double scale,
                                              std::uint64_t seed);

/// CSV table `t,x,y,z,vx,vy,vz,ax,ay,az`.
void write_trajectory_csv(std::ostream& os, const PolyTrajectory& traj, double dt);
void write_trajectory_csv(std::ostream& os, const WaypointTrajectory& traj);
/// Same table from explicit per-row states.
void write_trajectory_csv(std::ostream& os, std::span<const double> times, const Eigen::MatrixX3d& p,
                          const Eigen::MatrixX3d& v, const Eigen::MatrixX3d& a);

}  // namespace mmdplan
