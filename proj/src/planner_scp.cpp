#include "mmdplan/planner_scp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCore>

#include "mmdplan/parallel.hpp"
#include "mmdplan/qp.hpp"

namespace mmdplan {

void ScpConfig::validate() const {
  if (candidates < 1) throw std::invalid_argument("ScpConfig: candidates must be >= 1");
  if (!(inflate_quantile > 0.0 && inflate_quantile < 1.0)) {
    throw std::invalid_argument("ScpConfig: inflate_quantile must lie in (0, 1)");
  }
  if (!(trust_radius > 0.0)) throw std::invalid_argument("ScpConfig: trust_radius must be > 0");
  if (scp_iterations < 1) throw std::invalid_argument("ScpConfig: scp_iterations must be >= 1");
  if (!(stomp_scale >= 0.0)) throw std::invalid_argument("ScpConfig: stomp_scale must be >= 0");
  band.validate();
}

int inflation_sample_count(GridCounts counts) { return std::max(counts.total(), 8000); }

namespace {

// Face order: +x, -x, +y, -y, +z in the nominal body frame.
using Excursion = std::array<double, 5>;

Excursion excursions(const Cuboid& sample, const LocalTransform& to_body, const Vec3& h) {
  Excursion e{0, 0, 0, 0, 0};
  for (const Vec3& v : sample.vertices()) {
    const Vec3 b = to_body.apply(v);
    e[0] = std::max(e[0], b.x() - h.x());
    e[1] = std::max(e[1], -b.x() - h.x());
    e[2] = std::max(e[2], b.y() - h.y());
    e[3] = std::max(e[3], -b.y() - h.y());
    e[4] = std::max(e[4], b.z() - h.z());
  }
  return e;
}

// Nearest rank; `v` is sorted.
double quantile_of(const std::vector<double>& v, double q) {
  const auto n = static_cast<double>(v.size());
  const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(q * n) - 1.0, 0.0, n - 1.0));
  return v[idx];
}

}  // namespace

Cuboid inflate(const UncertainCuboid& u, double quantile, GridCounts counts, std::uint64_t seed) {
  if (!(quantile > 0.0 && quantile <= 1.0)) throw std::invalid_argument("inflate: quantile must lie in (0, 1]");
  if (u.bank.is_zero()) return u.nominal;
  const int n = inflation_sample_count(counts);
  const auto samples = draw_realizations(u, n, seed);
  const LocalTransform to_body = local_transform(u.nominal);
  const Vec3 h = u.nominal.half_extents();

  std::vector<Excursion> ex(samples.size());
  std::array<std::vector<double>, 5> per_face;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    ex[s] = excursions(samples[s], to_body, h);
    for (int f = 0; f < 5; ++f) per_face[f].push_back(ex[s][f]);
  }
  for (auto& v : per_face) std::sort(v.begin(), v.end());
  const double target = quantile + 0.5 * (1.0 - quantile);
  Excursion bound{};
  for (double level = quantile;; level = std::min(1.0, level + 0.0025)) {
    for (int f = 0; f < 5; ++f) bound[f] = quantile_of(per_face[f], level);
    std::size_t inside = 0;
    for (const auto& e : ex) {
      bool ok = true;
      for (int f = 0; f < 5; ++f) ok = ok && e[f] <= bound[f];
      inside += ok;
    }
    if (static_cast<double>(inside) >= target * static_cast<double>(ex.size()) || level >= 1.0) break;
  }

  // Body-frame box [-hx - e1, hx + e0] x [-hy - e3, hy + e2], z in [0, 2hz + e4].
  const double cx = 0.5 * (bound[0] - bound[1]);
  const double cy = 0.5 * (bound[2] - bound[3]);
  Cuboid out = u.nominal;
  out.size.thickness = u.nominal.size.thickness + bound[0] + bound[1];
  out.size.length = u.nominal.size.length + bound[2] + bound[3];
  out.size.height = u.nominal.size.height + bound[4];
  const Vec3 shift = cx * u.nominal.normal() + cy * u.nominal.tangent();
  out.pose = GroundPose2D(u.nominal.pose.origin + shift.head<2>(), u.nominal.pose.yaw);
  return out;
}

InflatedWorld inflate_world(std::span<const UncertainCuboid> world, const ScpConfig& cfg) {
  InflatedWorld w;
  w.cuboids.resize(world.size());
  parallel_for(world.size(), [&](std::size_t i) {
    w.cuboids[i] = cfg.inflate ? inflate(world[i], cfg.inflate_quantile, cfg.counts, derive_seed(cfg.seed, 7000 + i))
                               : world[i].nominal;
  });
  return w;
}

namespace {

std::vector<Vec3> rows_of(const WaypointTrajectory& t) {
  std::vector<Vec3> q(static_cast<std::size_t>(t.size()));
  for (Eigen::Index r = 0; r < t.size(); ++r) q[r] = t.points.row(r).transpose();
  return q;
}

}  // namespace

RankedInit mmd_rank_init(std::span<const UncertainCuboid> world, const Vec3& start, const Vec3& goal,
                         int n_waypoints, double dt, const ScpConfig& cfg) {
  cfg.validate();
  const WaypointTrajectory base = straight_line(start, goal, n_waypoints, dt);
  std::vector<WaypointTrajectory> cands{base};
  if (cfg.candidates > 1) {
    // stomp_scale is the largest per-waypoint standard deviation in meters.
    const auto noise = StompNoise::cached(n_waypoints, dt);
    const double peak = std::sqrt(noise->covariance().diagonal().maxCoeff());
    auto extra = stomp_samples(base, cfg.candidates - 1, cfg.stomp_scale / peak, derive_seed(cfg.seed, 1));
    cands.insert(cands.end(), extra.begin(), extra.end());
  }

  std::vector<SampleGrid> grids;
  grids.reserve(world.size());
  for (std::size_t i = 0; i < world.size(); ++i) grids.push_back(draw_grid(world[i], cfg.counts, derive_seed(cfg.seed, 100 + i)));

  RankedInit out;
  const auto base_q = rows_of(base);
  out.bandwidth = grids.empty() ? cfg.bandwidth_floor
                                : median_bandwidth(violation_samples(grids, base_q, cfg.band), cfg.bandwidth_floor);
  const auto kernel = KernelConfig::uniform(cfg.counts, out.bandwidth);

  out.mmd.assign(cands.size(), 0.0);
  std::vector<double> smooth(cands.size());
  parallel_for(cands.size(), [&](std::size_t c) {
    const auto q = rows_of(cands[c]);
    out.mmd[c] = grids.empty() ? 0.0 : mmd_trajectory(grids, q, cfg.band, kernel);
    smooth[c] = smoothness_cost(cands[c]);
  });
  std::size_t best = 0;
  for (std::size_t c = 1; c < cands.size(); ++c) {
    if (out.mmd[c] < out.mmd[best] || (out.mmd[c] == out.mmd[best] && smooth[c] < smooth[best])) best = c;
  }
  out.index = static_cast<int>(best);
  out.trajectory = cands[best];
  return out;
}

namespace {

struct Layout {
  int n;
  bool acc_rows;  // boundary accelerations enforced
  int fixed_head() const { return acc_rows ? 3 : 2; }
  bool fixed(int r) const { return r < fixed_head() || r >= n - fixed_head(); }
};

Vec3 fd_gradient(const Cuboid& c, const Vec3& q, double h) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 p = q, m = q;
    p(a) += h;
    m(a) -= h;
    g(a) = (signed_distance(c, p) - signed_distance(c, m)) / (2.0 * h);
  }
  const double n = g.norm();
  if (n > 1.0) g /= n;
  if (n < 1e-9) {
    // Flat spot (e.g. the exact middle of a slab): push out along the normal.
    const Vec3 d = q - c.center();
    g = d.dot(c.normal()) >= 0.0 ? c.normal() : Vec3(-c.normal());
  }
  return g;
}

double accel_cost(const Eigen::MatrixX3d& x, double dt) {
  WaypointTrajectory t{x, dt};
  return smoothness_cost(t);
}

struct Linearization {
  int row;
  Vec3 point;
  Vec3 grad;
  double value;
  int obstacle;
  bool plane;  // exact half-space; otherwise linearized signed distance
};

// Side and top faces as half-spaces n.q <= b (the bottom sits on the ground).
// Staying r outside any one of them keeps sdf >= r, so each is a safe
// separating plane.
std::array<std::pair<Vec3, double>, 5> face_planes(const Cuboid& c) {
  const LocalTransform t = local_transform(c);
  const Vec3 h = c.half_extents();
  std::array<std::pair<Vec3, double>, 5> out;
  for (int a = 0; a < 2; ++a) {
    const Vec3 n = t.rotation.row(a).transpose();
    out[2 * a] = {n, h(a) - t.translation(a)};
    out[2 * a + 1] = {-n, h(a) + t.translation(a)};
  }
  out[4] = {Vec3::UnitZ(), c.size.height};
  return out;
}

// Signed distance to a box is convex along a line, so golden section finds the
// segment minimum.
double segment_min_distance(const Cuboid& c, const Vec3& p0, const Vec3& p1) {
  constexpr double g = 0.6180339887498949;
  auto f = [&](double s) { return signed_distance(c, p0 + s * (p1 - p0)); };
  double lo = 0.0, hi = 1.0;
  double s1 = hi - g * (hi - lo), s2 = lo + g * (hi - lo), f1 = f(s1), f2 = f(s2);
  for (int k = 0; k < 40; ++k) {
    if (f1 < f2) {
      hi = s2, s2 = s1, f2 = f1;
      s1 = hi - g * (hi - lo), f1 = f(s1);
    } else {
      lo = s1, s1 = s2, f1 = f2;
      s2 = lo + g * (hi - lo), f2 = f(s2);
    }
  }
  return std::min({f1, f2, f(0.0), f(1.0)});
}

// Waypoints inside an obstacle: the signed-distance gradient points at the
// nearest face, which for a path crossing a slab is straight back along the
// path. Each contiguous inside run instead shares one face plane: the one with
// the smallest exit depth among faces not facing along the run.
void linearize_inside_runs(const Eigen::MatrixX3d& x, const Layout& lay, const Cuboid& c, int obstacle,
                           std::vector<Linearization>& out, std::vector<char>& inside) {
  const int n = lay.n;
  const auto planes = face_planes(c);
  int r = 0;
  while (r < n) {
    if (!inside[r]) {
      ++r;
      continue;
    }
    int e = r;
    while (e + 1 < n && inside[e + 1]) ++e;
    const int a = std::max(r - 1, 0), b = std::min(e + 1, n - 1);
    Vec3 u = (x.row(b) - x.row(a)).transpose();
    if (u.norm() > 1e-9) u.normalize();
    int best = -1;
    double best_depth = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 2 && best < 0; ++pass) {
      for (int f = 0; f < 5; ++f) {
        if (pass == 0 && std::abs(planes[f].first.dot(u)) > 0.7) continue;
        double depth = 0.0;
        for (int k = r; k <= e; ++k) depth = std::max(depth, planes[f].second - planes[f].first.dot(x.row(k).transpose()));
        if (depth < best_depth) best_depth = depth, best = f;
      }
    }
    const auto& [nf, bf] = planes[best];
    for (int k = r; k <= e; ++k) {
      const Vec3 q = x.row(k).transpose();
      out.push_back({k, q, nf, nf.dot(q) - bf, obstacle, true});
    }
    r = e + 1;
  }
}

}  // namespace

double scp_merit(const WaypointTrajectory& traj, std::span<const Cuboid> world, const ScpConfig& cfg) {
  const Layout lay{static_cast<int>(traj.size()), traj.size() >= 6};
  double pen = 0.0;
  for (int r = 0; r < lay.n; ++r) {
    if (lay.fixed(r)) continue;
    const Vec3 q = traj.points.row(r).transpose();
    for (const Cuboid& c : world) pen += std::max(cfg.band.r_min - signed_distance(c, q), 0.0);
  }
  return smoothness_cost(traj) + cfg.penalty * pen;
}

ScpResult scp_refine(std::span<const Cuboid> world, const WaypointTrajectory& init, const BoundaryState& start,
                     const BoundaryState& goal, const ScpConfig& cfg) {
  cfg.validate();
  init.validate();
  const int n = static_cast<int>(init.size());
  if (n < 4) throw std::invalid_argument("scp_refine: need at least 4 waypoints");
  const double dt = init.dt;
  const Layout lay{n, n >= 6};
  const int nx = 3 * n;
  auto var = [](int r, int a) { return 3 * r + a; };

  // Hessian of sum ||D x||^2 / dt^3 on every axis.
  std::vector<Eigen::Triplet<double>> hess_t;
  const double hw = 2.0 / (dt * dt * dt);
  for (int r = 1; r + 1 < n; ++r) {
    const int idx[3] = {r - 1, r, r + 1};
    const double c[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) hess_t.emplace_back(var(idx[i], a), var(idx[j], a), hw * c[i] * c[j]);
  }

  // Boundary equalities.
  std::vector<Eigen::Triplet<double>> eq_t;
  std::vector<double> eq_b;
  auto add_eq = [&](std::initializer_list<std::pair<int, double>> terms, int a, double rhs) {
    const int row = static_cast<int>(eq_b.size());
    for (const auto& [r, c] : terms) eq_t.emplace_back(row, var(r, a), c);
    eq_b.push_back(rhs);
  };
  for (int a = 0; a < 3; ++a) {
    add_eq({{0, 1.0}}, a, start.position(a));
    add_eq({{1, 1.0}, {0, -1.0}}, a, start.velocity(a) * dt);
    add_eq({{n - 1, 1.0}}, a, goal.position(a));
    add_eq({{n - 1, 1.0}, {n - 2, -1.0}}, a, goal.velocity(a) * dt);
    if (lay.acc_rows) {
      add_eq({{2, 1.0}, {1, -2.0}, {0, 1.0}}, a, start.acceleration(a) * dt * dt);
      add_eq({{n - 1, 1.0}, {n - 2, -2.0}, {n - 3, 1.0}}, a, goal.acceleration(a) * dt * dt);
    }
  }

  // Velocity and acceleration boxes plus the altitude floor, in that order.
  using RowSink = std::function<void(std::initializer_list<std::pair<int, double>>, double)>;
  const auto& lim = cfg.limits;
  const double floor = std::min({lim.min_altitude, start.position.z(), goal.position.z()});
  auto add_limit_rows = [&](const RowSink& add_in) {
    for (int r = 0; r + 1 < n; ++r) {
      if (lay.fixed(r) && lay.fixed(r + 1)) continue;
      for (int a = 0; a < 3; ++a) {
        add_in({{var(r + 1, a), 1.0}, {var(r, a), -1.0}}, lim.v_max * dt);
        add_in({{var(r + 1, a), -1.0}, {var(r, a), 1.0}}, lim.v_max * dt);
      }
    }
    for (int r = 1; r + 1 < n; ++r) {
      if (lay.fixed(r - 1) && lay.fixed(r) && lay.fixed(r + 1)) continue;
      for (int a = 0; a < 3; ++a) {
        add_in({{var(r + 1, a), 1.0}, {var(r, a), -2.0}, {var(r - 1, a), 1.0}}, lim.a_max * dt * dt);
        add_in({{var(r + 1, a), -1.0}, {var(r, a), 2.0}, {var(r - 1, a), -1.0}}, lim.a_max * dt * dt);
      }
    }
    for (int r = 0; r < n; ++r) {
      if (!lay.fixed(r)) add_in({{var(r, 2), -1.0}}, -floor);
    }
  };
  auto flatten = [&](const Eigen::MatrixX3d& m) {
    Eigen::VectorXd f(nx);
    for (int r = 0; r < n; ++r) f.segment<3>(3 * r) = m.row(r).transpose();
    return f;
  };

  ScpResult res;
  res.initial = init;
  Eigen::MatrixX3d x = init.points;
  double radius = cfg.trust_radius;
  int qp_failures = 0;

  // The guess (a STOMP draw) may break the boundary rows or the limits. Repair
  // it with the least-acceleration deformation that meets them; unlike a full
  // step from far away this keeps the way the guess goes around obstacles.
  {
    std::vector<Eigen::Triplet<double>> lt;
    std::vector<double> lh;
    add_limit_rows([&](std::initializer_list<std::pair<int, double>> terms, double rhs) {
      const int row = static_cast<int>(lh.size());
      for (const auto& [v, c] : terms) lt.emplace_back(row, v, c);
      lh.push_back(rhs);
    });
    QpProblem qp;
    qp.hessian.resize(nx, nx);
    qp.hessian.setFromTriplets(hess_t.begin(), hess_t.end());
    qp.eq_matrix.resize(static_cast<Eigen::Index>(eq_b.size()), nx);
    qp.eq_matrix.setFromTriplets(eq_t.begin(), eq_t.end());
    qp.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_b.data(), static_cast<Eigen::Index>(eq_b.size()));
    qp.ineq_matrix.resize(static_cast<Eigen::Index>(lh.size()), nx);
    qp.ineq_matrix.setFromTriplets(lt.begin(), lt.end());
    qp.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(lh.data(), static_cast<Eigen::Index>(lh.size()));
    const Eigen::VectorXd x0 = flatten(x);
    const double eq_gap = (qp.eq_matrix * x0 - qp.eq_rhs).cwiseAbs().maxCoeff();
    const double in_gap = lh.empty() ? 0.0 : (qp.ineq_matrix * x0 - qp.ineq_rhs).maxCoeff();
    if (eq_gap > 1e-9 || in_gap > 1e-9) {
      qp.gradient = -(qp.hessian * x0);
      const QpResult sol = solve_qp(qp, QpOptions{1e-10, 100});
      if (sol.status == QpStatus::Infeasible) {
        res.trajectory = init;
        res.infeasible = true;
        res.message = "boundary state and limits admit no trajectory of this length";
        return res;
      }
      for (int r = 0; r < n; ++r)
        for (int a = 0; a < 3; ++a) x(r, a) = sol.x(var(r, a));
    }
  }
  double merit = scp_merit(WaypointTrajectory{x, dt}, world, cfg);
  res.merit.push_back(merit);

  for (int it = 0; it < cfg.scp_iterations; ++it) {
    // Active pairs: anything the trust box could push below r_min.
    std::vector<Linearization> lin;
    const double reach = radius * std::sqrt(3.0);
    std::vector<char> inside(n);
    std::vector<double> dist(n);
    for (int ci = 0; ci < static_cast<int>(world.size()); ++ci) {
      const Cuboid& c = world[ci];
      for (int r = 0; r < n; ++r) {
        inside[r] = 0;
        dist[r] = signed_distance(c, x.row(r).transpose());
        if (!lay.fixed(r) && dist[r] < 0.0) inside[r] = 1;
      }
      // A segment through a thin obstacle has both ends outside, pulled to
      // opposite faces; no step within the speed limit satisfies both. Its
      // ends join the inside runs so they share one face.
      for (int r = 0; r + 1 < n; ++r) {
        if (dist[r] < 0.0 || dist[r + 1] < 0.0 || (lay.fixed(r) && lay.fixed(r + 1))) continue;
        const Vec3 p0 = x.row(r).transpose(), p1 = x.row(r + 1).transpose();
        if (std::min(dist[r], dist[r + 1]) > 0.5 * (p1 - p0).norm()) continue;  // 1-Lipschitz: cannot pierce
        if (segment_min_distance(c, p0, p1) < 0.0) {
          if (!lay.fixed(r)) inside[r] = 1;
          if (!lay.fixed(r + 1)) inside[r + 1] = 1;
        }
      }
      for (int r = 0; r < n; ++r) {
        if (lay.fixed(r) || inside[r] || dist[r] - reach >= cfg.band.r_min) continue;
        const Vec3 q = x.row(r).transpose();
        lin.push_back({r, q, fd_gradient(c, q, cfg.fd_step), dist[r], ci, false});
      }
      linearize_inside_runs(x, lay, c, ci, lin, inside);
    }
    const int ns = static_cast<int>(lin.size());
    const int nv = nx + ns;

    QpProblem qp;
    qp.hessian.resize(nv, nv);
    qp.hessian.setFromTriplets(hess_t.begin(), hess_t.end());
    qp.gradient = Eigen::VectorXd::Zero(nv);
    qp.gradient.tail(ns).setConstant(cfg.penalty);
    qp.eq_matrix.resize(static_cast<Eigen::Index>(eq_b.size()), nv);
    qp.eq_matrix.setFromTriplets(eq_t.begin(), eq_t.end());
    qp.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_b.data(), static_cast<Eigen::Index>(eq_b.size()));

    std::vector<Eigen::Triplet<double>> in_t;
    std::vector<double> in_h;
    auto add_in = [&](std::initializer_list<std::pair<int, double>> terms, double rhs) {
      const int row = static_cast<int>(in_h.size());
      for (const auto& [v, c] : terms) in_t.emplace_back(row, v, c);
      in_h.push_back(rhs);
    };
    add_limit_rows(add_in);
    for (int r = 0; r < n; ++r) {
      if (lay.fixed(r)) continue;
      for (int a = 0; a < 3; ++a) {
        add_in({{var(r, a), 1.0}}, x(r, a) + radius);
        add_in({{var(r, a), -1.0}}, radius - x(r, a));
      }
    }
    // d + g.(q - q0) + s >= r_min
    for (int j = 0; j < ns; ++j) {
      const auto& l = lin[j];
      add_in({{var(l.row, 0), -l.grad(0)}, {var(l.row, 1), -l.grad(1)}, {var(l.row, 2), -l.grad(2)}, {nx + j, -1.0}},
             l.value - l.grad.dot(l.point) - cfg.band.r_min);
      add_in({{nx + j, -1.0}}, 0.0);
    }
    qp.ineq_matrix.resize(static_cast<Eigen::Index>(in_h.size()), nv);
    qp.ineq_matrix.setFromTriplets(in_t.begin(), in_t.end());
    qp.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(in_h.data(), static_cast<Eigen::Index>(in_h.size()));

    const QpResult sol = solve_qp(qp, QpOptions{1e-10, 100});
    res.iterations = it + 1;
    // MaxIterations still carries a primal-feasible point; the ratio test
    // decides whether it is any good.
    if (sol.status == QpStatus::Infeasible) {
      radius *= 0.5;
      if (++qp_failures >= 3) {
        res.infeasible = true;
        res.message = "QP has no solution under the trust region after 3 consecutive shrinkages";
        break;
      }
      continue;
    }

    Eigen::MatrixX3d cand(n, 3);
    for (int r = 0; r < n; ++r)
      for (int a = 0; a < 3; ++a) cand(r, a) = sol.x(var(r, a));
    const double step = (cand - x).rowwise().norm().maxCoeff();

    // Ratio test on this iteration's merit: face-plane terms are exact and
    // signed-distance terms are evaluated for real. It equals the model at x.
    // Inside a slab the true merit is flat while waypoints slide toward the
    // chosen exit, so it cannot judge those steps.
    double model_x = accel_cost(x, dt), model = accel_cost(cand, dt), iter_merit = model;
    for (int j = 0; j < ns; ++j) {
      const auto& l = lin[j];
      const Vec3 q = cand.row(l.row).transpose();
      const double lin_d = l.value + l.grad.dot(q - l.point);
      model_x += cfg.penalty * std::max(cfg.band.r_min - l.value, 0.0);
      model += cfg.penalty * std::max(cfg.band.r_min - lin_d, 0.0);
      const double d = l.plane ? lin_d : signed_distance(world[l.obstacle], q);
      iter_merit += cfg.penalty * std::max(cfg.band.r_min - d, 0.0);
    }
    const WaypointTrajectory cand_t{cand, dt};
    const double new_merit = scp_merit(cand_t, world, cfg);
    const double predicted = model_x - model;
    const double actual = model_x - iter_merit;

    if (predicted <= 1e-12 * std::max(1.0, std::abs(merit)) || step < cfg.move_tolerance) {
      // Nothing left to gain under the model; keep the better of the two.
      if (iter_merit <= model_x) {
        x = cand;
        merit = new_merit;
        res.merit.push_back(merit);
      }
      break;
    }
    const double ratio = actual / predicted;
    if (ratio >= 0.1) {
      x = cand;
      merit = new_merit;
      res.merit.push_back(merit);
      qp_failures = 0;
      if (actual <= 1e-7 * std::max(1.0, std::abs(merit))) break;
      if (ratio > 0.75) radius = std::min(2.0 * radius, cfg.max_trust_radius);
    } else {
      radius *= 0.5;
      if (radius < 1e-3) break;
    }
  }

  res.trajectory = WaypointTrajectory{x, dt};
  double worst = std::numeric_limits<double>::infinity();
  for (int r = lay.fixed_head(); r < n; ++r) {
    const Vec3 q = x.row(r).transpose();
    for (const Cuboid& c : world) worst = std::min(worst, sdf(c, q));
  }
  res.min_inflated_sdf = worst;
  bool pierced = false;
  for (int r = std::max(lay.fixed_head() - 1, 0); r + 1 < n && !pierced; ++r) {
    const Vec3 p0 = x.row(r).transpose(), p1 = x.row(r + 1).transpose();
    for (const Cuboid& c : world)
      if (segment_min_distance(c, p0, p1) < 0.0) pierced = true;
  }
  if (!res.infeasible) {
    res.success = !(worst < cfg.band.r_min * (1.0 - 1e-3)) && !pierced;
    if (pierced)
      res.message = "final trajectory passes through an inflated obstacle between waypoints";
    else if (!res.success)
      res.message = "final trajectory comes closer than r_min to an inflated obstacle";
  }
  return res;
}

ScpResult plan_scp(std::span<const UncertainCuboid> world, const BoundaryState& start, const BoundaryState& goal,
                   const ScpConfig& cfg, int n_waypoints, double dt) {
  cfg.validate();
  if (n_waypoints < 4) throw std::invalid_argument("plan_scp: need at least 4 waypoints");
  if (!(dt > 0.0)) throw std::invalid_argument("plan_scp: dt must be > 0");
  const RankedInit init = mmd_rank_init(world, start.position, goal.position, n_waypoints, dt, cfg);
  const InflatedWorld inflated = inflate_world(world, cfg);
  return scp_refine(inflated.cuboids, init.trajectory, start, goal, cfg);
}

}  // namespace mmdplan
