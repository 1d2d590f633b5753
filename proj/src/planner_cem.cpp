#include "mmdplan/planner_cem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "mmdplan/parallel.hpp"

namespace mmdplan {

void CemConfig::validate() const {
  if (population < 1 || elites < 1 || elites > population) {
    throw std::invalid_argument("CemConfig: require 1 <= elites <= population");
  }
  if (iterations < 1) throw std::invalid_argument("CemConfig: iterations must be >= 1");
  if (!(mmd_weight >= 0.0)) throw std::invalid_argument("CemConfig: mmd_weight must be >= 0");
  if (!(cov_floor > 0.0)) throw std::invalid_argument("CemConfig: cov_floor must be > 0");
  if (!(init_std > 0.0)) throw std::invalid_argument("CemConfig: init_std must be > 0");
  if (degree < 3) throw std::invalid_argument("CemConfig: degree must be >= 3");
  if (eval_samples < 2) throw std::invalid_argument("CemConfig: eval_samples must be >= 2");
  band.validate();
}

void CemTrace::write_csv(std::ostream& os) const {
  const auto old = os.precision(12);
  os << "iteration,elite_mean_cost,best_cost,mean_cost,cov_trace\n";
  for (std::size_t i = 0; i < size(); ++i) {
    os << i << ',' << elite_mean_cost[i] << ',' << best_cost[i] << ',' << mean_cost[i] << ','
       << cov_trace[i] << '\n';
  }
  os.precision(old);
}

CemOutcome cem_minimize(const Eigen::VectorXd& mean0, const Eigen::VectorXd& std0, const CostFn& cost,
                        const CemOptions& opt) {
  const Eigen::Index dim = mean0.size();
  if (std0.size() != dim) throw std::invalid_argument("cem_minimize: std size mismatch");
  if (opt.population < 1 || opt.elites < 1 || opt.elites > opt.population || opt.iterations < 1) {
    throw std::invalid_argument("cem_minimize: invalid population/elites/iterations");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXd mean = mean0;
  Eigen::VectorXd var = std0.array().square().matrix();
  struct Member {
    Eigen::VectorXd x;
    double cost;
  };
  std::vector<Member> kept;
  CemOutcome out;
  out.best_cost = std::numeric_limits<double>::infinity();

  std::vector<Eigen::VectorXd> xs(opt.population);
  std::vector<double> cs(opt.population);
  for (int it = 0; it < opt.iterations; ++it) {
    xs[0] = mean;
    for (int s = 1; s < opt.population; ++s) {
      xs[s].resize(dim);
      for (Eigen::Index d = 0; d < dim; ++d) xs[s](d) = mean(d) + std::sqrt(var(d)) * gauss(rng);
    }
    parallel_for(static_cast<std::size_t>(opt.population), [&](std::size_t s) { cs[s] = cost(xs[s]); });

    std::vector<Member> pool = kept;
    for (int s = 0; s < opt.population; ++s) pool.push_back({xs[s], cs[s]});
    // Retained elites come first, so equal costs keep the older member.
    std::stable_sort(pool.begin(), pool.end(), [](const Member& a, const Member& b) {
      const bool an = std::isnan(a.cost), bn = std::isnan(b.cost);
      if (an != bn) return bn;
      return a.cost < b.cost;
    });
    pool.resize(std::min<std::size_t>(pool.size(), opt.elites));
    kept = pool;

    if (kept.front().cost < out.best_cost) {
      out.best_cost = kept.front().cost;
      out.best = kept.front().x;
    }
    double elite_mean = 0.0;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    for (const auto& e : kept) {
      elite_mean += e.cost;
      m += e.x;
    }
    elite_mean /= static_cast<double>(kept.size());
    m /= static_cast<double>(kept.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    for (const auto& e : kept) v += (e.x - m).array().square().matrix();
    v /= static_cast<double>(kept.size());
    mean = m;
    var = v.cwiseMax(opt.cov_floor);

    out.trace.elite_mean_cost.push_back(elite_mean);
    out.trace.best_cost.push_back(out.best_cost);
    out.trace.mean_cost.push_back(cs[0]);
    out.trace.cov_trace.push_back(var.sum());
  }
  out.mean = mean;
  return out;
}

void enforce_start(PolyTrajectory& traj, const BoundaryState& start) {
  const double t0[] = {0.0};
  const BasisMatrices b = basis_matrices(t0, traj.degree, traj.duration);
  Mat3 m;
  m.row(0) = b.p.block(0, 0, 1, 3);
  m.row(1) = b.pd.block(0, 0, 1, 3);
  m.row(2) = b.pdd.block(0, 0, 1, 3);
  const int rest = traj.degree + 1 - 3;
  for (int a = 0; a < 3; ++a) {
    Eigen::VectorXd& c = traj.axis(a);
    const Eigen::VectorXd hi = c.tail(rest);
    Vec3 rhs(start.position(a), start.velocity(a), start.acceleration(a));
    rhs(0) -= (b.p.block(0, 3, 1, rest) * hi)(0);
    rhs(1) -= (b.pd.block(0, 3, 1, rest) * hi)(0);
    rhs(2) -= (b.pdd.block(0, 3, 1, rest) * hi)(0);
    c.head(3) = m.partialPivLu().solve(rhs);
  }
}

PolyTrajectory min_jerk_to_goal(const BoundaryState& start, const Vec3& goal, double duration, int degree) {
  PolyTrajectory p;
  p.degree = degree;
  p.duration = duration;
  for (int a = 0; a < 3; ++a) p.axis(a) = Eigen::VectorXd::Zero(degree + 1);
  enforce_start(p, start);
  const int m = degree - 2;
  const Eigen::MatrixXd g = jerk_gram(degree, duration).block(3, 3, m, m);
  const Eigen::VectorXd w = g.ldlt().solve(Eigen::VectorXd::Ones(m));
  const double denom = w.sum();
  for (int a = 0; a < 3; ++a) {
    // p(T) = sum of coefficients on normalized time.
    const double r = goal(a) - p.axis(a).head(3).sum();
    p.axis(a).tail(m) = (r / denom) * w;
  }
  return p;
}

Eigen::MatrixXd bernstein_to_monomial(int degree) {
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int i = 0; i <= degree; ++i) {
    for (int k = i; k <= degree; ++k) {
      m(k, i) = binom(degree, i) * binom(degree - i, k - i) * (((k - i) % 2) ? -1.0 : 1.0);
    }
  }
  return m;
}

double default_duration(const Vec3& from, const Vec3& to, const Limits& limits) {
  return std::max(1.0, (to - from).norm() / (0.6 * limits.v_max));
}

double CemCostModel::mmd(const PolyTrajectory& traj) const {
  if (grids.empty()) return 0.0;
  const auto s = eval(traj, basis);
  std::vector<Vec3> q(static_cast<std::size_t>(s.position.rows()));
  for (Eigen::Index r = 0; r < s.position.rows(); ++r) q[r] = s.position.row(r).transpose();
  return mmd_trajectory(grids, q, band, kernel);
}

double CemCostModel::operator()(const PolyTrajectory& traj) const {
  const auto s = eval(traj, basis);
  double c = smoothness_cost(traj) + limit_penalty(s, limits);
  const Eigen::Index last = s.position.rows() - 1;
  c += goal_weight * (s.position.row(last).transpose() - goal).squaredNorm();
  // Below the floor is weighted like the goal term; row 0 is the fixed start.
  for (Eigen::Index r = 1; r <= last; ++r) {
    const double low = std::max(limits.min_altitude - s.position(r, 2), 0.0);
    c += goal_weight * low * low;
  }
  if (mmd_weight > 0.0 && !grids.empty()) {
    std::vector<Vec3> q(static_cast<std::size_t>(s.position.rows()));
    for (Eigen::Index r = 0; r < s.position.rows(); ++r) q[r] = s.position.row(r).transpose();
    c += mmd_weight * mmd_trajectory(grids, q, band, kernel);
  }
  return c;
}

CemResult plan_cem(std::span<const UncertainCuboid> world, const BoundaryState& start, const Vec3& goal,
                   const Limits& limits, double duration, const CemConfig& cfg) {
  cfg.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("plan_cem: duration must be > 0");
  const auto times = uniform_times(duration, cfg.eval_samples);

  CemCostModel model;
  model.band = cfg.band;
  model.limits = limits;
  model.goal = goal;
  model.goal_weight = cfg.goal_weight;
  model.mmd_weight = cfg.mmd_weight;
  model.basis = basis_matrices(times, cfg.degree, duration);
  // Grids are drawn once per call so every sample sees the same realizations.
  for (std::size_t i = 0; i < world.size(); ++i) {
    model.grids.push_back(draw_grid(world[i], cfg.counts, derive_seed(cfg.seed, i)));
  }

  const PolyTrajectory init = min_jerk_to_goal(start, goal, duration, cfg.degree);
  double sigma = cfg.bandwidth;
  if (!(sigma > 0.0)) {
    const auto s = eval(init, model.basis);
    std::vector<Vec3> q;
    for (Eigen::Index r = 0; r < s.position.rows(); ++r) q.push_back(s.position.row(r).transpose());
    const auto v = model.grids.empty() ? std::vector<double>{} : violation_samples(model.grids, q, cfg.band);
    sigma = median_bandwidth(v, cfg.bandwidth_floor);
  }
  model.kernel = KernelConfig::uniform(cfg.counts, sigma);

  // Search runs over Bernstein control points 3..n; p(T) depends only on the
  // last one, so shape perturbations do not drag the endpoint around.
  const int free = cfg.degree - 2;
  const Eigen::MatrixXd to_mono = bernstein_to_monomial(cfg.degree);
  const Eigen::MatrixXd to_bern = to_mono.inverse();
  auto unpack = [&](const Eigen::VectorXd& x) {
    PolyTrajectory p = init;
    for (int a = 0; a < 3; ++a) {
      Eigen::VectorXd b(cfg.degree + 1);
      b.tail(free) = x.segment(a * free, free);
      // First three control points from the start state.
      const double n = cfg.degree;
      b(0) = start.position(a);
      b(1) = b(0) + start.velocity(a) * duration / n;
      b(2) = 2.0 * b(1) - b(0) + start.acceleration(a) * duration * duration / (n * (n - 1.0));
      p.axis(a) = to_mono * b;
    }
    return p;
  };
  Eigen::VectorXd x0(3 * free);
  for (int a = 0; a < 3; ++a) x0.segment(a * free, free) = (to_bern * init.axis(a)).tail(free);

  CemOptions opt{cfg.population, cfg.elites, cfg.iterations, cfg.cov_floor, derive_seed(cfg.seed, 1u << 20)};
  const auto outcome = cem_minimize(x0, Eigen::VectorXd::Constant(3 * free, cfg.init_std),
                                    [&](const Eigen::VectorXd& x) { return model(unpack(x)); }, opt);

  CemResult res;
  res.trajectory = unpack(outcome.best);
  res.trace = outcome.trace;
  res.cost = outcome.best_cost;
  res.bandwidth = sigma;

  // Audit against the nominal cuboids at the evaluation samples, skipping the
  // fixed start point.
  const auto audit = eval(res.trajectory, model.basis);
  double worst = std::numeric_limits<double>::infinity();
  double lowest = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 1; r < audit.position.rows(); ++r) {
    const Vec3 q = audit.position.row(r).transpose();
    for (const auto& u : world) worst = std::min(worst, sdf(u.nominal, q));
    lowest = std::min(lowest, q.z());
  }
  res.min_nominal_sdf = worst;
  res.success = !(worst < cfg.band.r_min * (1.0 - cfg.failure_tolerance));
  if (!res.success) res.message = "trajectory comes closer than r_min to a nominal obstacle";
  const double floor = std::min(limits.min_altitude, start.position.z());
  if (res.success && lowest < floor - cfg.failure_tolerance) {
    res.success = false;
    res.message = "trajectory drops below the minimum altitude";
  }
  return res;
}

}  // namespace mmdplan
