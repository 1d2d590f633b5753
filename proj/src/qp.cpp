#include "mmdplan/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseLU>

namespace mmdplan {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Largest step in (0, 1] keeping v + a * dv >= 0.
double max_step(const Vec& v, const Vec& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

class KktSolver {
 public:
  KktSolver(const SpMat& hessian, const SpMat& eq) : h_(hessian), a_(eq) {}

  bool factor(const SpMat& g, const Vec& weights) {
    const Eigen::Index n = h_.rows();
    const Eigen::Index p = a_.rows();
    SpMat m = h_;
    if (g.rows() > 0) m += SpMat(g.transpose() * weights.asDiagonal() * g);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m.nonZeros() + 2 * a_.nonZeros() + n));
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SpMat::InnerIterator it(m, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    }
    for (int k = 0; k < a_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(a_, k); it; ++it) {
        trips.emplace_back(n + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n + it.row(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, 1e-13);
    kkt_.resize(n + p, n + p);
    kkt_.setFromTriplets(trips.begin(), trips.end());
    kkt_.makeCompressed();
    if (!pattern_ready_) {
      lu_.analyzePattern(kkt_);
      pattern_ready_ = true;
    }
    lu_.factorize(kkt_);
    return lu_.info() == Eigen::Success;
  }

  bool solve(const Vec& rx, const Vec& ry, Vec& dx, Vec& dy) {
    const Eigen::Index n = h_.rows();
    Vec rhs(n + a_.rows());
    rhs << rx, ry;
    const Vec sol = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !sol.allFinite()) return false;
    dx = sol.head(n);
    dy = sol.tail(a_.rows());
    return true;
  }

 private:
  const SpMat& h_;
  const SpMat& a_;
  SpMat kkt_;
  Eigen::SparseLU<SpMat> lu_;
  bool pattern_ready_{false};
};

}  // namespace

QpResult solve_qp(const QpProblem& pr, const QpOptions& opt) {
  const Eigen::Index n = pr.hessian.rows();
  const Eigen::Index p = pr.eq_matrix.rows();
  const Eigen::Index m = pr.ineq_matrix.rows();
  if (pr.hessian.cols() != n || pr.gradient.size() != n ||
      (p > 0 && (pr.eq_matrix.cols() != n || pr.eq_rhs.size() != p)) ||
      (m > 0 && (pr.ineq_matrix.cols() != n || pr.ineq_rhs.size() != m))) {
    throw std::invalid_argument("solve_qp: inconsistent problem dimensions");
  }
  const SpMat& g = pr.ineq_matrix;
  const Vec& h = pr.ineq_rhs;
  KktSolver kkt(pr.hessian, pr.eq_matrix);
  QpResult res;

  auto objective = [&](const Vec& x) { return 0.5 * x.dot(pr.hessian * x) + pr.gradient.dot(x); };

  if (m == 0) {
    Vec dx, dy;
    if (!kkt.factor(g, Vec()) || !kkt.solve(-pr.gradient, p ? Vec(pr.eq_rhs) : Vec(), dx, dy)) {
      res.status = QpStatus::Infeasible;
      return res;
    }
    res.status = QpStatus::Solved;
    res.x = dx;
    res.objective = objective(dx);
    res.iterations = 1;
    return res;
  }

  // Least-squares start, then shift slacks into the positive orthant.
  Vec x, y;
  if (!kkt.factor(g, Vec::Ones(m)) ||
      !kkt.solve(-pr.gradient + g.transpose() * h, p ? Vec(pr.eq_rhs) : Vec(), x, y)) {
    res.status = QpStatus::Infeasible;
    return res;
  }
  Vec s = h - g * x;
  const double smin = s.minCoeff();
  if (smin < 1.0) s.array() += 1.0 - smin;
  Vec z = Vec::Ones(m);
  y.setZero();

  const double g_scale = 1.0 + inf_norm(pr.gradient);
  const double b_scale = 1.0 + (p ? inf_norm(pr.eq_rhs) : 0.0);
  const double h_scale = 1.0 + inf_norm(h);

  // Best iterate so far: near the rounding floor the residuals can stall just
  // above the tolerance and a few more steps make them worse, not better.
  Vec best_x = x;
  double best_err = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    const Vec rd = pr.hessian * x + pr.gradient + (p ? Vec(pr.eq_matrix.transpose() * y) : Vec::Zero(n)) +
                   g.transpose() * z;
    const Vec re = p ? Vec(pr.eq_matrix * x - pr.eq_rhs) : Vec();
    const Vec ri = g * x + s - h;
    const double mu = s.dot(z) / static_cast<double>(m);

    const double pres = std::max(p ? inf_norm(re) / b_scale : 0.0, inf_norm(ri) / h_scale);
    const double dres = inf_norm(rd) / g_scale;
    // Complementarity is measured relative to the objective magnitude.
    const double gap = mu * static_cast<double>(m) / (1.0 + std::abs(objective(x)));
    if (pres <= opt.tolerance && dres <= opt.tolerance && gap <= opt.tolerance) {
      res.status = QpStatus::Solved;
      res.x = x;
      res.objective = objective(x);
      return res;
    }
    const double err = std::max({pres, dres, gap});
    if (err < best_err) best_err = err, best_x = x;
    if (inf_norm(z) > 1e14 || !x.allFinite()) break;

    const Vec w = z.cwiseQuotient(s);
    if (!kkt.factor(g, w)) break;

    auto direction = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& ds, Vec& dz) {
      const Vec rx = -rd - g.transpose() * (z.cwiseProduct(ri) - rc).cwiseQuotient(s);
      if (!kkt.solve(rx, p ? Vec(-re) : Vec(), dx, dy)) return false;
      ds = -ri - g * dx;
      dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      return true;
    };

    Vec dx, dy, ds, dz;
    const Vec rc_aff = s.cwiseProduct(z);
    if (!direction(rc_aff, dx, dy, ds, dz)) break;
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3.0);

    const Vec rc = rc_aff + ds.cwiseProduct(dz) - Vec::Constant(m, sigma * mu);
    if (!direction(rc, dx, dy, ds, dz)) break;
    const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    x += a * dx;
    if (p) y += a * dy;
    s += a * ds;
    z += a * dz;
  }

  x = best_x;
  res.x = x;
  res.objective = objective(x);
  if (best_err <= 1e3 * opt.tolerance) {
    res.status = QpStatus::Solved;
    return res;
  }
  const bool primal_ok = (p == 0 || inf_norm(Vec(pr.eq_matrix * x - pr.eq_rhs)) / b_scale <= 1e-6) &&
                         (g * x - h).maxCoeff() <= 1e-6 * h_scale;
  res.status = primal_ok ? QpStatus::MaxIterations : QpStatus::Infeasible;
  return res;
}

}  // namespace mmdplan
