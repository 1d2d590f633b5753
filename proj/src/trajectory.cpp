#include "mmdplan/trajectory.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace mmdplan {

void PolyTrajectory::validate() const {
  if (degree < 3) throw std::invalid_argument("PolyTrajectory: degree must be >= 3");
  if (!(duration > 0.0)) throw std::invalid_argument("PolyTrajectory: duration must be > 0");
  if (cx.size() != degree + 1 || cy.size() != degree + 1 || cz.size() != degree + 1) {
    throw std::invalid_argument("PolyTrajectory: coefficient vectors must have degree+1 entries");
  }
}

void WaypointTrajectory::validate() const {
  if (points.rows() < 4) throw std::invalid_argument("WaypointTrajectory: need at least 4 waypoints");
  if (!(dt > 0.0)) throw std::invalid_argument("WaypointTrajectory: dt must be > 0");
}

Eigen::MatrixX3d WaypointTrajectory::velocities() const {
  const Eigen::Index n = points.rows();
  Eigen::MatrixX3d v(n, 3);
  for (Eigen::Index r = 0; r + 1 < n; ++r) v.row(r) = (points.row(r + 1) - points.row(r)) / dt;
  v.row(n - 1) = (points.row(n - 1) - points.row(n - 2)) / dt;
  return v;
}

Eigen::MatrixX3d WaypointTrajectory::accelerations() const {
  const Eigen::Index n = points.rows();
  const double inv = 1.0 / (dt * dt);
  Eigen::MatrixX3d a(n, 3);
  for (Eigen::Index r = 1; r + 1 < n; ++r) {
    a.row(r) = (points.row(r + 1) - 2.0 * points.row(r) + points.row(r - 1)) * inv;
  }
  a.row(0) = (points.row(2) - 2.0 * points.row(1) + points.row(0)) * inv;
  a.row(n - 1) = (points.row(n - 1) - 2.0 * points.row(n - 2) + points.row(n - 3)) * inv;
  return a;
}

BoundaryState WaypointTrajectory::state_at(Eigen::Index row) const {
  const auto v = velocities();
  const auto a = accelerations();
  BoundaryState s;
  s.position = points.row(row).transpose();
  s.velocity = v.row(row).transpose();
  s.acceleration = a.row(row).transpose();
  return s;
}

BasisMatrices basis_matrices(std::span<const double> times, int degree, double duration) {
  if (degree < 3) throw std::invalid_argument("basis_matrices: degree must be >= 3");
  if (!(duration > 0.0)) throw std::invalid_argument("basis_matrices: duration must be > 0");
  const Eigen::Index rows = static_cast<Eigen::Index>(times.size());
  const int cols = degree + 1;
  BasisMatrices b{Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols),
                  Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)};
  const double inv_t = 1.0 / duration;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double s = times[r] * inv_t;
    // powers[c] = s^c
    std::vector<double> powers(cols, 1.0);
    for (int c = 1; c < cols; ++c) powers[c] = powers[c - 1] * s;
    for (int c = 0; c < cols; ++c) {
      b.p(r, c) = powers[c];
      if (c >= 1) b.pd(r, c) = c * powers[c - 1] * inv_t;
      if (c >= 2) b.pdd(r, c) = c * (c - 1) * powers[c - 2] * inv_t * inv_t;
      if (c >= 3) b.pddd(r, c) = c * (c - 1) * (c - 2) * powers[c - 3] * inv_t * inv_t * inv_t;
    }
  }
  return b;
}

TrajectorySamples eval(const PolyTrajectory& traj, const BasisMatrices& b) {
  const Eigen::Index rows = b.p.rows();
  TrajectorySamples out{Eigen::MatrixX3d(rows, 3), Eigen::MatrixX3d(rows, 3),
                        Eigen::MatrixX3d(rows, 3), Eigen::MatrixX3d(rows, 3)};
  for (int a = 0; a < 3; ++a) {
    out.position.col(a) = b.p * traj.axis(a);
    out.velocity.col(a) = b.pd * traj.axis(a);
    out.acceleration.col(a) = b.pdd * traj.axis(a);
    out.jerk.col(a) = b.pddd * traj.axis(a);
  }
  return out;
}

TrajectorySamples eval(const PolyTrajectory& traj, std::span<const double> times) {
  traj.validate();
  return eval(traj, basis_matrices(times, traj.degree, traj.duration));
}

BoundaryState state_at(const PolyTrajectory& traj, double t) {
  const double times[] = {t};
  const auto s = eval(traj, times);
  return {s.position.row(0).transpose(), s.velocity.row(0).transpose(),
          s.acceleration.row(0).transpose()};
}

std::vector<double> uniform_times(double duration, int count) {
  if (count < 2) throw std::invalid_argument("uniform_times: need at least 2 samples");
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = duration * static_cast<double>(i) / (count - 1);
  return t;
}

Eigen::MatrixXd jerk_gram(int degree, double duration) {
  const int n = degree + 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  const double t3 = duration * duration * duration;
  // jerk basis: c(c-1)(c-2) s^(c-3) / T^3; integral of s^m over [0, T] dt = T / (m + 1).
  for (int a = 3; a < n; ++a) {
    for (int c = 3; c < n; ++c) {
      const double fa = a * (a - 1) * (a - 2);
      const double fc = c * (c - 1) * (c - 2);
      g(a, c) = fa * fc / (t3 * t3) * duration / static_cast<double>(a + c - 5);
    }
  }
  return g;
}

double smoothness_cost(const PolyTrajectory& traj) {
  traj.validate();
  const Eigen::MatrixXd g = jerk_gram(traj.degree, traj.duration);
  double total = 0.0;
  for (int a = 0; a < 3; ++a) total += traj.axis(a).dot(g * traj.axis(a));
  return total;
}

double smoothness_cost(const WaypointTrajectory& traj) {
  traj.validate();
  const double inv = 1.0 / (traj.dt * traj.dt);
  double total = 0.0;
  for (Eigen::Index r = 1; r + 1 < traj.points.rows(); ++r) {
    const Eigen::RowVector3d acc =
        (traj.points.row(r + 1) - 2.0 * traj.points.row(r) + traj.points.row(r - 1)) * inv;
    total += acc.squaredNorm() * traj.dt;
  }
  return total;
}

double limit_penalty(const TrajectorySamples& s, const Limits& limits) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < s.velocity.rows(); ++r) {
    for (int a = 0; a < 3; ++a) {
      const double ev = std::max(std::abs(s.velocity(r, a)) - limits.v_max, 0.0);
      const double ea = std::max(std::abs(s.acceleration(r, a)) - limits.a_max, 0.0);
      total += ev * ev + ea * ea;
    }
  }
  return total;
}

double limit_penalty(const PolyTrajectory& traj, const Limits& limits, std::span<const double> times) {
  return limit_penalty(eval(traj, times), limits);
}

WaypointTrajectory straight_line(const Vec3& from, const Vec3& to, int n, double dt) {
  if (n < 2) throw std::invalid_argument("straight_line: need at least 2 waypoints");
  WaypointTrajectory w{Eigen::MatrixX3d(n, 3), dt};
  for (int r = 0; r < n; ++r) {
    const double s = static_cast<double>(r) / (n - 1);
    w.points.row(r) = ((1.0 - s) * from + s * to).transpose();
  }
  return w;
}

StompNoise::StompNoise(int n, double dt) : n_(n), dt_(dt) {
  if (n < 4) throw std::invalid_argument("StompNoise: need at least 4 waypoints");
  if (!(dt > 0.0)) throw std::invalid_argument("StompNoise: dt must be > 0");
  const Eigen::MatrixXd a = second_difference();
  const Eigen::MatrixXd r = a.transpose() * a;
  const Eigen::MatrixXd r_int = r.block(1, 1, n - 2, n - 2);
  cov_ = r_int.llt().solve(Eigen::MatrixXd::Identity(n - 2, n - 2));
  cov_ = 0.5 * (cov_ + cov_.transpose());
  chol_ = cov_.llt().matrixL();
}

Eigen::MatrixXd StompNoise::second_difference() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_ - 2, n_);
  const double inv = 1.0 / (dt_ * dt_);
  for (int r = 0; r < n_ - 2; ++r) {
    a(r, r) = inv;
    a(r, r + 1) = -2.0 * inv;
    a(r, r + 2) = inv;
  }
  return a;
}

std::shared_ptr<const StompNoise> StompNoise::cached(int n, double dt) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const StompNoise>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{n, dt}];
  if (!slot) slot = std::make_shared<const StompNoise>(n, dt);
  return slot;
}

std::vector<WaypointTrajectory> stomp_samples(const WaypointTrajectory& base, int k, double scale,
                                              std::uint64_t seed) {
  base.validate();
  if (k < 1) throw std::invalid_argument("stomp_samples: k must be >= 1");
  const int n = static_cast<int>(base.size());
  const auto noise = StompNoise::cached(n, base.dt);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<WaypointTrajectory> out(k, base);
  Eigen::VectorXd z(n - 2);
  for (int s = 0; s < k; ++s) {
    for (int a = 0; a < 3; ++a) {
      for (int i = 0; i < n - 2; ++i) z(i) = gauss(rng);
      if (scale == 0.0) continue;
      out[s].points.col(a).segment(1, n - 2) += scale * (noise->cholesky() * z);
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, std::span<const double> times, const Eigen::MatrixX3d& p,
                          const Eigen::MatrixX3d& v, const Eigen::MatrixX3d& a) {
  if (static_cast<Eigen::Index>(times.size()) != p.rows() || v.rows() != p.rows() || a.rows() != p.rows()) {
    throw std::invalid_argument("write_trajectory_csv: row counts differ");
  }
  const auto old_precision = os.precision(10);
  os << "t,x,y,z,vx,vy,vz,ax,ay,az\n";
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    os << times[r];
    for (const auto* m : {&p, &v, &a}) {
      for (int c = 0; c < 3; ++c) os << ',' << (*m)(r, c);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

void write_trajectory_csv(std::ostream& os, const PolyTrajectory& traj, double dt) {
  const int count = std::max(2, static_cast<int>(std::floor(traj.duration / dt + 1e-9)) + 1);
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = std::min(i * dt, traj.duration);
  const auto s = eval(traj, t);
  write_trajectory_csv(os, t, s.position, s.velocity, s.acceleration);
}

void write_trajectory_csv(std::ostream& os, const WaypointTrajectory& traj) {
  std::vector<double> t(traj.size());
  for (Eigen::Index i = 0; i < traj.size(); ++i) t[i] = traj.dt * static_cast<double>(i);
  write_trajectory_csv(os, t, traj.points, traj.velocities(), traj.accelerations());
}

}  // namespace mmdplan
