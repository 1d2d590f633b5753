#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mmdplan {

/// Convex QP: minimize 1/2 x^T H x + g^T x  s.t.  A x = b,  G x <= h.
/// H must be positive semidefinite.
struct QpProblem {
  Eigen::SparseMatrix<double> hessian;
  Eigen::VectorXd gradient;
  Eigen::SparseMatrix<double> eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::SparseMatrix<double> ineq_matrix;
  Eigen::VectorXd ineq_rhs;
};

enum class QpStatus { Solved, Infeasible, MaxIterations };

struct QpOptions {
  double tolerance{1e-10};
  int max_iterations{80};
};

struct QpResult {
  QpStatus status{QpStatus::MaxIterations};
  Eigen::VectorXd x;
  double objective{0.0};
  int iterations{0};
};

/// Mehrotra predictor-corrector primal-dual interior point method.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace mmdplan
