#include "mmdplan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "mmdplan/parallel.hpp"

namespace mmdplan {

const char* planner_name(PlannerKind p) {
  switch (p) {
    case PlannerKind::Cem: return "cem";
    case PlannerKind::Scp: return "scp";
    case PlannerKind::Det: return "det";
  }
  return "?";
}

PlannerKind parse_planner(const std::string& name) {
  if (name == "cem") return PlannerKind::Cem;
  if (name == "scp") return PlannerKind::Scp;
  if (name == "det") return PlannerKind::Det;
  throw std::invalid_argument("unknown planner '" + name + "' (expected cem, scp or det)");
}

void ExecutedPath::write_csv(std::ostream& os) const {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixX3d p(n, 3), v(n, 3), a(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.row(i) = position[i].transpose();
    v.row(i) = velocity[i].transpose();
    a.row(i) = acceleration[i].transpose();
  }
  write_trajectory_csv(os, t, p, v, a);
}

namespace {

using Clock = std::chrono::steady_clock;

struct SegmentationError {
  double yaw;
  Vec2 size, origin;
};

SegmentationError draw_segmentation_error(const ErrorBank& bank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  SegmentationError e;
  e.yaw = bank.yaw[pick(bank.yaw.size())];
  e.size = bank.size[pick(bank.size.size())];
  e.origin = bank.origin[pick(bank.origin.size())];
  return e;
}

// truth = estimate + draw, so the planner's bank model is well specified.
Cuboid remove_error(const Cuboid& est, const SegmentationError& e) {
  Cuboid c = est;
  c.pose = GroundPose2D(est.pose.origin - e.origin, est.pose.yaw - e.yaw);
  c.size.length = std::max(est.size.length - e.size.x(), kMinPerturbedSize);
  c.size.height = std::max(est.size.height - e.size.y(), kMinPerturbedSize);
  return c;
}

double segment_distance(const Vec3& a, const Vec3& b, const Cuboid& c) {
  // Coarse: minimum over a few samples along the chord; used only for relevance.
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 16; ++i) d = std::min(d, sdf(c, a + (b - a) * (i / 16.0)));
  return d;
}

double jerk_integral(const PolyTrajectory& traj, double horizon) {
  const int n = 200;  // Simpson intervals, even
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = horizon * i / n;
  const auto s = eval(traj, t);
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * s.jerk.row(i).squaredNorm();
  }
  return acc * horizon / (3.0 * n);
}

// Cruise-speed horizon, stretched so that braking to rest at the goal stays
// within half the acceleration limit.
double plan_duration(const BoundaryState& from, const Vec3& goal, const Limits& lim, double floor) {
  const double d = (goal - from.position).norm();
  const double a = 0.5 * lim.a_max;
  return std::max({floor, default_duration(from.position, goal, lim), 2.0 * std::sqrt(d / a),
                   2.0 * from.velocity.norm() / a});
}

class Trial {
 public:
  Trial(const Scenario& sc, PlannerKind planner, std::uint64_t seed, ErrorBank bank)
      : sc_(sc), planner_(planner), seed_(seed), bank_(std::move(bank)), faces_(scenario_faces(sc)) {}

  TrialResult run();

 private:
  void perceive(int step);
  std::vector<UncertainCuboid> planning_world() const;
  // Returns false on a collision.
  bool audit(const std::vector<Vec3>& samples);
  void push_row(double t, const BoundaryState& s) {
    out_.path.t.push_back(t);
    out_.path.position.push_back(s.position);
    out_.path.velocity.push_back(s.velocity);
    out_.path.acceleration.push_back(s.acceleration);
  }
  bool step_cem(int step, double duration);
  bool step_waypoint(int step, double duration);

  const Scenario& sc_;
  PlannerKind planner_;
  std::uint64_t seed_;
  ErrorBank bank_;
  std::vector<Cuboid> faces_;

  std::map<int, Cuboid> known_;
  std::map<int, SegmentationError> seg_;
  BoundaryState state_;
  double t_{0.0};
  Vec3 last_audited_;
  bool any_audited_{false};
  bool ground_hit_{false};
  std::vector<Vec3> waypoints_;  // executed rows (scp, det)
  TrialResult out_;
};

void Trial::perceive(int step) {
  const auto& pc = sc_.config.perception;
  const Vec3 pos = state_.position;
  const Vec3 dir = sc_.goal - pos;
  const CameraModel cam = sc_.camera.at(pos, std::atan2(dir.y(), dir.x()));
  const bool any = std::any_of(faces_.begin(), faces_.end(),
                               [&](const Cuboid& f) { return face_visible(f, cam, pc.cloud.max_range); });
  if (!any) return;
  const LabeledCloud cloud = synthesize_cloud(faces_, cam, pc.cloud, derive_seed(seed_, 2 * step + 10));
  const EstimateResult est = estimate_nominal(cloud, cam, faces_, bank_, pc.estimate, pc.cloud.noise,
                                              derive_seed(seed_, 2 * step + 11));
  const bool inject = pc.segmentation_error && !bank_.is_zero();
  for (const auto& n : est.nominals) {
    Cuboid c = n.estimate.nominal;
    if (inject) {
      auto it = seg_.find(n.label);
      if (it == seg_.end()) {
        it = seg_.emplace(n.label, draw_segmentation_error(bank_, derive_seed(seed_, 100000 + n.label))).first;
      }
      c = remove_error(c, it->second);
    }
    known_[n.label] = c;
  }
}

std::vector<UncertainCuboid> Trial::planning_world() const {
  const ErrorBank bank = planner_ == PlannerKind::Det ? ErrorBank::zero() : bank_;
  const Vec3 a = state_.position, b = sc_.goal;
  const double radius = 0.5 * (b - a).norm() + 20.0;
  std::vector<UncertainCuboid> world;
  for (const auto& [label, c] : known_) {
    if (segment_distance(a, b, c) <= radius) world.push_back(UncertainCuboid{c, bank});
  }
  return world;
}

bool Trial::audit(const std::vector<Vec3>& samples) {
  auto& m = out_.metrics;
  for (const Vec3& p : samples) {
    if (any_audited_) m.traversed_length += (p - last_audited_).norm();
    last_audited_ = p;
    any_audited_ = true;
    for (const auto& b : sc_.buildings) {
      const double d = signed_distance(b, p);
      m.min_gt_clearance = std::min(m.min_gt_clearance, d);
    }
    if (p.z() <= 0.0) ground_hit_ = true;
    if (m.min_gt_clearance <= 0.0 || ground_hit_) return false;
  }
  return true;
}

bool Trial::step_cem(int step, double duration) {
  const auto& tc = sc_.config.trial;
  CemConfig cfg = sc_.config.cem;
  cfg.band = sc_.band;
  cfg.seed = derive_seed(seed_, 1000 + step);
  const auto world = planning_world();
  const CemResult res = plan_cem(world, state_, sc_.goal, sc_.limits, duration, cfg);
  if (!res.success) ++out_.metrics.audit_flags;
  out_.cem_traces.push_back(res.trace);
  const PolyTrajectory& traj = res.trajectory;
  const double h = duration - tc.replan_interval < 1e-9 ? duration : tc.replan_interval;

  std::vector<double> ts;
  for (double t = tc.cem_export_dt; t < h - 1e-9; t += tc.cem_export_dt) ts.push_back(t);
  ts.push_back(h);
  const auto s = eval(traj, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    push_row(t_ + ts[i], {s.position.row(i).transpose(), s.velocity.row(i).transpose(),
                          s.acceleration.row(i).transpose()});
  }
  const int n_audit = std::max(1, static_cast<int>(std::ceil(h / tc.audit_dt - 1e-9)));
  std::vector<double> ta(n_audit);
  for (int i = 0; i < n_audit; ++i) ta[i] = h * (i + 1) / n_audit;
  const auto sa = eval(traj, ta);
  std::vector<Vec3> q(ta.size());
  for (std::size_t i = 0; i < ta.size(); ++i) q[i] = sa.position.row(i).transpose();

  out_.metrics.smoothness += jerk_integral(traj, h);
  state_ = state_at(traj, h);
  t_ += h;
  return audit(q);
}

bool Trial::step_waypoint(int step, double duration) {
  const auto& tc = sc_.config.trial;
  const double dt = tc.waypoint_dt;
  ScpConfig cfg = sc_.config.scp;
  cfg.band = sc_.band;
  cfg.limits = sc_.limits;
  cfg.seed = derive_seed(seed_, 1000 + step);
  cfg.inflate = planner_ != PlannerKind::Det;
  const int n = std::max(6, static_cast<int>(std::ceil(duration / dt - 1e-9)) + 1);
  const auto world = planning_world();
  const ScpResult res = plan_scp(world, state_, BoundaryState{sc_.goal, Vec3::Zero(), Vec3::Zero()}, cfg, n, dt);
  if (res.infeasible) throw std::runtime_error("planner: " + res.message);
  if (!res.success) ++out_.metrics.audit_flags;
  const WaypointTrajectory& traj = res.trajectory;
  const int per_plan = static_cast<int>(std::lround(tc.replan_interval / dt));
  const int k = std::min<int>(per_plan, static_cast<int>(traj.size()) - 1);

  const auto v = traj.velocities();
  const auto a = traj.accelerations();
  const int sub = std::max(1, static_cast<int>(std::ceil(dt / tc.audit_dt - 1e-9)));
  std::vector<Vec3> q;
  for (int r = 1; r <= k; ++r) {
    const Vec3 p0 = traj.points.row(r - 1).transpose(), p1 = traj.points.row(r).transpose();
    for (int j = 1; j <= sub; ++j) q.push_back(p0 + (p1 - p0) * (static_cast<double>(j) / sub));
    push_row(t_ + r * dt, {p1, v.row(r).transpose(), a.row(r).transpose()});
    waypoints_.push_back(p1);
  }
  state_ = traj.state_at(k);
  t_ += k * dt;
  return audit(q);
}

TrialResult Trial::run() {
  auto& m = out_.metrics;
  const auto& tc = sc_.config.trial;
  m.min_gt_clearance = std::numeric_limits<double>::infinity();
  state_ = sc_.start;
  push_row(0.0, state_);
  waypoints_.push_back(state_.position);
  audit({state_.position});

  bool failed = false;
  for (int step = 0; step < tc.max_replans; ++step) {
    if ((state_.position - sc_.goal).norm() <= tc.goal_tolerance) {
      m.reached_goal = true;
      break;
    }
    const auto t0 = Clock::now();
    try {
      perceive(step);
    } catch (const std::exception& e) {
      m.message = std::string("perception: ") + e.what();
      failed = true;
      break;
    }
    const double duration = plan_duration(state_, sc_.goal, sc_.limits, tc.min_duration);
    bool ok = true;
    try {
      ok = planner_ == PlannerKind::Cem ? step_cem(step, duration) : step_waypoint(step, duration);
    } catch (const std::exception& e) {
      m.compute_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
      m.message = std::string(e.what()).rfind("planner: ", 0) == 0 ? e.what() : std::string("planner: ") + e.what();
      failed = true;
      break;
    }
    m.compute_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
    ++m.replans;
    if (!ok) {
      m.message = ground_hit_ ? "collision with the ground" : "collision with a ground-truth building";
      failed = true;
      break;
    }
  }
  if (!failed && !m.reached_goal) {
    if ((state_.position - sc_.goal).norm() <= tc.goal_tolerance) {
      m.reached_goal = true;
    } else {
      m.message = "replan budget exhausted";
    }
  }
  m.success = !failed && m.reached_goal && m.min_gt_clearance > 0.0 && !ground_hit_;
  if (m.success) m.message = "goal reached";

  if (planner_ != PlannerKind::Cem) {
    Eigen::MatrixX3d pts(static_cast<Eigen::Index>(waypoints_.size()), 3);
    for (std::size_t i = 0; i < waypoints_.size(); ++i) pts.row(i) = waypoints_[i].transpose();
    if (pts.rows() >= 3) m.smoothness = smoothness_cost(WaypointTrajectory{pts, tc.waypoint_dt});
  }
  return std::move(out_);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fmt(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

TrialResult run_trial(const Scenario& scenario, PlannerKind planner, std::uint64_t seed, const ErrorBank* bank) {
  scenario.validate();
  ErrorBank b = bank ? *bank : resolve_bank(scenario);
  b.validate();
  Trial trial(scenario, planner, seed, std::move(b));
  return trial.run();
}

BenchTable benchmark(const std::vector<Scenario>& scenarios, const BenchOptions& opt) {
  if (opt.n_seeds < 1) throw std::invalid_argument("benchmark: n_seeds must be >= 1");
  if (opt.planners.empty()) throw std::invalid_argument("benchmark: no planners");
  std::vector<ErrorBank> banks;
  for (const auto& s : scenarios) {
    s.validate();
    banks.push_back(resolve_bank(s));
  }
  const std::size_t np = opt.planners.size(), ns = static_cast<std::size_t>(opt.n_seeds);
  BenchTable table;
  table.timing = opt.timing;
  table.trials.resize(scenarios.size() * np * ns);
  parallel_for(table.trials.size(), [&](std::size_t i) {
    const std::size_t si = i / (np * ns), pi = (i / ns) % np, k = i % ns;
    table.trials[i] = run_trial(scenarios[si], opt.planners[pi], opt.first_seed + k, &banks[si]).metrics;
  });
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      BenchRow row;
      row.scenario = scenarios[si].name;
      row.planner = opt.planners[pi];
      std::vector<double> smooth, comp, len, clear;
      for (std::size_t k = 0; k < ns; ++k) {
        const RunMetrics& m = table.trials[(si * np + pi) * ns + k];
        ++row.trials;
        if (m.success) ++row.successes;
        smooth.push_back(m.smoothness);
        comp.push_back(m.compute_seconds);
        len.push_back(m.traversed_length);
        clear.push_back(m.min_gt_clearance);
      }
      row.smoothness_mean = mean_of(smooth);
      row.smoothness_std = std_of(smooth);
      row.compute_mean = mean_of(comp);
      row.compute_std = std_of(comp);
      row.length_mean = mean_of(len);
      row.length_std = std_of(len);
      row.clearance_mean = mean_of(clear);
      row.clearance_std = std_of(clear);
      table.rows.push_back(row);
    }
  }
  return table;
}

void write_bench_table(std::ostream& os, const BenchTable& t) {
  os << "scenario,planner,trials,success_pct,smoothness_mean,smoothness_std,compute_mean_s,compute_std_s,"
        "length_mean_m,length_std_m,min_clearance_mean_m,min_clearance_std_m\n";
  for (const auto& r : t.rows) {
    os << r.scenario << ',' << planner_name(r.planner) << ',' << r.trials << ',' << fmt(r.success_pct(), 2) << ','
       << fmt(r.smoothness_mean, 4) << ',' << fmt(r.smoothness_std, 4) << ','
       << (t.timing ? fmt(r.compute_mean, 4) : "-") << ',' << (t.timing ? fmt(r.compute_std, 4) : "-") << ','
       << fmt(r.length_mean, 3) << ',' << fmt(r.length_std, 3) << ',' << fmt(r.clearance_mean, 3) << ','
       << fmt(r.clearance_std, 3) << '\n';
  }
}

std::string metrics_to_json(const RunMetrics& m, PlannerKind planner, std::uint64_t seed) {
  using json = nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const json j{
      {"planner", planner_name(planner)},
      {"seed", seed},
      {"success", m.success},
      {"reached_goal", m.reached_goal},
      {"smoothness", num(m.smoothness)},
      {"smoothness_unit", planner == PlannerKind::Cem ? "m^2/s^5" : "m^2/s^3"},
      {"compute_seconds", num(m.compute_seconds)},
      {"traversed_length", num(m.traversed_length)},
      {"min_gt_clearance", num(m.min_gt_clearance)},
      {"replans", m.replans},
      {"audit_flags", m.audit_flags},
      {"message", m.message},
  };
  return j.dump(2) + "\n";
}

std::vector<Cuboid> query_window(const Scenario& sc, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("query_window: radius must be > 0");
  Vec3 mid = 0.5 * (sc.start.position + sc.goal);
  std::vector<Cuboid> out;
  for (const auto& b : sc.buildings) {
    mid.z() = 0.5 * b.size.height;
    if (sdf(b, mid) <= radius) out.push_back(b);
  }
  return out;
}

ErrorBank calibrate(const Scenario& sc, const CalibrateOptions& opt) {
  if (opt.n_seeds < 1 || opt.viewpoints < 1) throw std::invalid_argument("calibrate: counts must be >= 1");
  sc.validate();
  const auto faces = scenario_faces(sc);
  const auto& pc = sc.config.perception;
  std::vector<std::pair<Cuboid, Cuboid>> pairs;
  const ErrorBank zero = ErrorBank::zero();
  for (int k = 0; k < opt.n_seeds; ++k) {
    const std::uint64_t seed = opt.first_seed + static_cast<std::uint64_t>(k);
    for (int v = 0; v < opt.viewpoints; ++v) {
      const double f = static_cast<double>(v) / opt.viewpoints;
      const Vec3 eye = sc.start.position + f * (sc.goal - sc.start.position);
      const Vec3 dir = sc.goal - sc.start.position;
      const CameraModel cam = sc.camera.at(eye, std::atan2(dir.y(), dir.x()));
      if (std::none_of(faces.begin(), faces.end(),
                       [&](const Cuboid& c) { return face_visible(c, cam, pc.cloud.max_range); })) {
        continue;
      }
      const auto cloud = synthesize_cloud(faces, cam, pc.cloud, derive_seed(seed, 2 * v));
      const auto est = estimate_nominal(cloud, cam, faces, zero, pc.estimate, pc.cloud.noise,
                                        derive_seed(seed, 2 * v + 1));
      for (const auto& n : est.nominals) pairs.emplace_back(n.estimate.nominal, faces[n.label]);
    }
  }
  if (pairs.empty()) throw std::runtime_error("calibrate: no facade was observed");
  return calibrate_bank(pairs);
}

}  // namespace mmdplan
