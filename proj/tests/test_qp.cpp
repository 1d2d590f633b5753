#include "mmdplan/qp.hpp"

#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

namespace mmdplan {
namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

TEST(Qp, EqualityOnlyMatchesKktSolve) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const int n = 6, p = 2;
  Eigen::MatrixXd l(n, n), a(p, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = g(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  const Eigen::MatrixXd h = l * l.transpose() + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd c(n), b(p);
  for (int i = 0; i < n; ++i) c(i) = g(rng);
  for (int i = 0; i < p; ++i) b(i) = g(rng);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = h;
  kkt.topRightCorner(n, p) = a.transpose();
  kkt.bottomLeftCorner(p, n) = a;
  Eigen::VectorXd rhs(n + p);
  rhs << -c, b;
  const Eigen::VectorXd expected = kkt.fullPivLu().solve(rhs).head(n);

  QpProblem pr{sparse(h), c, sparse(a), b, {}, {}};
  const auto r = solve_qp(pr);
  ASSERT_EQ(r.status, QpStatus::Solved);
  EXPECT_LT((r.x - expected).norm(), 1e-9);
}

TEST(Qp, BoxConstrainedProjection) {
  // min 1/2 |x - t|^2 s.t. -1 <= x <= 1 has solution clamp(t).
  const int n = 5;
  Eigen::VectorXd t(n);
  t << 2.0, -0.5, -3.0, 0.9, 1.0;
  Eigen::MatrixXd gm(2 * n, n);
  gm << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  QpProblem pr{sparse(Eigen::MatrixXd::Identity(n, n)), -t, {}, {}, sparse(gm), Eigen::VectorXd::Ones(2 * n)};
  const auto r = solve_qp(pr);
  ASSERT_EQ(r.status, QpStatus::Solved);
  const Eigen::VectorXd expected = t.cwiseMax(-1.0).cwiseMin(1.0);
  // Component 4 sits exactly on its bound (no strict complementarity), so it
  // only converges like sqrt(mu).
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.x(i), expected(i), 1e-7) << i;
  EXPECT_NEAR(r.x(4), expected(4), 1e-4);
}

TEST(Qp, ActiveSetClosedForm) {
  // min 1/2 (x^2 + y^2) s.t. x + y >= 2 and x - y = 0.4  ->  x = 1.2, y = 0.8.
  Eigen::MatrixXd a(1, 2), gm(1, 2);
  a << 1, -1;
  gm << -1, -1;
  QpProblem pr{sparse(Eigen::MatrixXd::Identity(2, 2)), Eigen::VectorXd::Zero(2), sparse(a),
               Eigen::VectorXd::Constant(1, 0.4), sparse(gm), Eigen::VectorXd::Constant(1, -2.0)};
  const auto r = solve_qp(pr);
  ASSERT_EQ(r.status, QpStatus::Solved);
  EXPECT_NEAR(r.x(0), 1.2, 1e-7);
  EXPECT_NEAR(r.x(1), 0.8, 1e-7);
  EXPECT_NEAR(r.objective, 0.5 * (1.44 + 0.64), 1e-7);
}

TEST(Qp, DetectsInfeasible) {
  Eigen::MatrixXd gm(2, 1);
  gm << 1, -1;
  Eigen::VectorXd h(2);
  h << -1, -1;  // x <= -1 and x >= 1
  QpProblem pr{sparse(Eigen::MatrixXd::Identity(1, 1)), Eigen::VectorXd::Zero(1), {}, {}, sparse(gm), h};
  EXPECT_NE(solve_qp(pr).status, QpStatus::Solved);
}

TEST(Qp, RejectsBadDimensions) {
  QpProblem pr{sparse(Eigen::MatrixXd::Identity(2, 2)), Eigen::VectorXd::Zero(3), {}, {}, {}, {}};
  EXPECT_THROW(solve_qp(pr), std::invalid_argument);
}

}  // namespace
}  // namespace mmdplan
