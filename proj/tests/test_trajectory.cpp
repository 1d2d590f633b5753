#include "mmdplan/trajectory.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace mmdplan {
namespace {

PolyTrajectory random_poly(std::mt19937_64& rng, double duration, int degree = 7) {
  std::normal_distribution<double> g(0.0, 3.0);
  PolyTrajectory p;
  p.degree = degree;
  p.duration = duration;
  for (int a = 0; a < 3; ++a) {
    p.axis(a).resize(degree + 1);
    for (int c = 0; c <= degree; ++c) p.axis(a)(c) = g(rng);
  }
  return p;
}

double horner(const Eigen::VectorXd& c, double s) {
  double v = 0.0;
  for (Eigen::Index i = c.size() - 1; i >= 0; --i) v = v * s + c(i);
  return v;
}

TEST(Basis, PositionMatchesHorner) {
  std::mt19937_64 rng(1);
  const auto p = random_poly(rng, 7.5);
  const auto t = uniform_times(7.5, 31);
  const auto s = eval(p, t);
  for (std::size_t r = 0; r < t.size(); ++r) {
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(s.position(r, a), horner(p.axis(a), t[r] / 7.5), 1e-10);
  }
}

TEST(Basis, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  const auto p = random_poly(rng, 4.0);
  const double h = 1e-4;
  for (double t : {0.3, 1.1, 2.0, 3.7}) {
    const double ts[] = {t - h, t, t + h};
    const auto s = eval(p, ts);
    for (int a = 0; a < 3; ++a) {
      const double vel = (s.position(2, a) - s.position(0, a)) / (2 * h);
      const double acc = (s.position(2, a) - 2 * s.position(1, a) + s.position(0, a)) / (h * h);
      const double jerk = (s.acceleration(2, a) - s.acceleration(0, a)) / (2 * h);
      EXPECT_NEAR(s.velocity(1, a), vel, 1e-5 * (1 + std::abs(vel)));
      EXPECT_NEAR(s.acceleration(1, a), acc, 1e-3 * (1 + std::abs(acc)));
      EXPECT_NEAR(s.jerk(1, a), jerk, 1e-5 * (1 + std::abs(jerk)));
    }
  }
}

TEST(JerkGram, MatchesQuadrature) {
  std::mt19937_64 rng(3);
  for (double dur : {1.0, 3.5, 12.0}) {
    const auto p = random_poly(rng, dur);
    // Composite Simpson on the evaluated jerk.
    const int n = 2000;
    const auto t = uniform_times(dur, n + 1);
    const auto s = eval(p, t);
    double q = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      q += w * s.jerk.row(i).squaredNorm();
    }
    q *= dur / n / 3.0;
    EXPECT_NEAR(smoothness_cost(p), q, 1e-8 * (1 + q));
  }
}

TEST(JerkGram, CubicHasConstantJerk) {
  PolyTrajectory p{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 2.0, 3};
  p.cx(3) = 1.0;  // x = (t/2)^3, jerk = 6/8
  EXPECT_NEAR(smoothness_cost(p), 0.75 * 0.75 * 2.0, 1e-12);
}

TEST(Waypoint, FiniteDifferencesOnQuadratic) {
  const double dt = 0.5;
  WaypointTrajectory w{Eigen::MatrixX3d(6, 3), dt};
  for (int r = 0; r < 6; ++r) {
    const double t = r * dt;
    w.points.row(r) << t * t, 2 * t, 1.0;
  }
  const auto a = w.accelerations();
  for (int r = 0; r < 6; ++r) {
    EXPECT_NEAR(a(r, 0), 2.0, 1e-12);
    EXPECT_NEAR(a(r, 1), 0.0, 1e-12);
  }
  const auto v = w.velocities();
  EXPECT_NEAR(v(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(smoothness_cost(w), 4.0 * dt * 4, 1e-12);
  EXPECT_NEAR(w.duration(), 2.5, 1e-15);
}

TEST(Limits, PenaltyIsZeroInsideAndQuadraticOutside) {
  TrajectorySamples s{Eigen::MatrixX3d::Zero(1, 3), Eigen::MatrixX3d::Zero(1, 3),
                      Eigen::MatrixX3d::Zero(1, 3), Eigen::MatrixX3d::Zero(1, 3)};
  s.velocity << 4.9, -5.0, 0.0;
  s.acceleration << 2.0, 0.0, -3.0;
  EXPECT_EQ(limit_penalty(s, Limits{}), 0.0);
  s.velocity << 6.0, -7.0, 0.0;
  s.acceleration << 3.5, 0.0, 0.0;
  EXPECT_NEAR(limit_penalty(s, Limits{}), 1.0 + 4.0 + 0.25, 1e-12);
}

TEST(Stomp, CovarianceIsInverseOfInteriorGram) {
  const StompNoise noise(10, 0.4);
  const Eigen::MatrixXd a = noise.second_difference();
  const Eigen::MatrixXd r = (a.transpose() * a).block(1, 1, 8, 8);
  EXPECT_TRUE((r * noise.covariance()).isApprox(Eigen::MatrixXd::Identity(8, 8), 1e-9));
  EXPECT_TRUE((noise.cholesky() * noise.cholesky().transpose()).isApprox(noise.covariance(), 1e-9));
}

TEST(Stomp, EmpiricalCovarianceMatches) {
  const int n = 10;
  const double dt = 0.4;
  const int draws = 10000;
  const auto base = straight_line(Vec3::Zero(), Vec3(10, 0, 0), n, dt);
  const auto samples = stomp_samples(base, draws, 1.0, 123);
  const Eigen::MatrixXd& cov = StompNoise::cached(n, dt)->covariance();
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(n - 2, n - 2);
  for (const auto& s : samples) {
    const Eigen::VectorXd e = (s.points.col(1) - base.points.col(1)).segment(1, n - 2);
    emp += e * e.transpose();
    EXPECT_EQ(s.points.row(0), base.points.row(0));
    EXPECT_EQ(s.points.row(n - 1), base.points.row(n - 1));
  }
  emp /= draws;
  for (int i = 0; i < n - 2; ++i) {
    for (int j = 0; j < n - 2; ++j) EXPECT_NEAR(emp(i, j), cov(i, j), 0.1 * std::abs(cov(i, j)));
  }
}

TEST(Stomp, ExpectedRoughnessIsTraceIdentity) {
  // E[z^T R_int z] for z ~ N(0, s^2 R_int^-1) is s^2 (n - 2) per axis.
  const int n = 12;
  const double dt = 0.3, scale = 0.7;
  const auto base = straight_line(Vec3::Zero(), Vec3::Zero(), n, dt);
  const auto noise = StompNoise::cached(n, dt);
  const Eigen::MatrixXd a = noise->second_difference();
  const int draws = 20000;
  const auto samples = stomp_samples(base, draws, scale, 9);
  double mean = 0.0;
  for (const auto& s : samples) {
    for (int c = 0; c < 3; ++c) mean += (a * s.points.col(c)).squaredNorm();
  }
  mean /= draws;
  const double expected = 3.0 * scale * scale * (n - 2);
  EXPECT_NEAR(mean, expected, 0.03 * expected);
}

TEST(Stomp, DeterministicAndZeroScale) {
  const auto base = straight_line(Vec3::Zero(), Vec3(1, 2, 3), 8, 0.5);
  const auto a = stomp_samples(base, 3, 0.5, 4);
  const auto b = stomp_samples(base, 3, 0.5, 4);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i].points, b[i].points);
  for (const auto& s : stomp_samples(base, 2, 0.0, 4)) EXPECT_EQ(s.points, base.points);
  EXPECT_THROW(stomp_samples(base, 0, 1.0, 1), std::invalid_argument);
}

TEST(Csv, HeaderAndRowCount) {
  std::ostringstream os;
  write_trajectory_csv(os, straight_line(Vec3::Zero(), Vec3(3, 0, 0), 4, 1.0));
  const std::string out = os.str();
  EXPECT_EQ(out.substr(0, out.find('\n')), "t,x,y,z,vx,vy,vz,ax,ay,az");
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 5);
  EXPECT_NE(out.find("\n1,1,0,0,1,0,0,0,0,0\n"), std::string::npos);
}

TEST(Validate, RejectsMalformed) {
  PolyTrajectory p{Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(7), 1.0, 7};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(uniform_times(1.0, 1), std::invalid_argument);
  EXPECT_THROW(StompNoise(3, 0.1), std::invalid_argument);
}

}  // namespace
}  // namespace mmdplan
