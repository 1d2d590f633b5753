#include "mmdplan/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mmdplan {

using json = nlohmann::ordered_json;

CameraModel CameraConfig::at(const Vec3& eye, double yaw) const {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.intrinsics = CameraModel::intrinsics_from_fov(hfov, width, height);
  cam.world_from_camera = CameraModel::level_pose(eye, yaw);
  return cam;
}

void Scenario::validate() const {
  band.validate();
  if (!(limits.v_max > 0.0) || !(limits.a_max > 0.0)) throw std::invalid_argument("scenario: limits must be > 0");
  if (!std::isfinite(limits.min_altitude)) throw std::invalid_argument("scenario: min_altitude must be finite");
  if (!(camera.hfov > 0.0 && camera.hfov < std::numbers::pi) || camera.width < 1 || camera.height < 1) {
    throw std::invalid_argument("scenario: bad camera");
  }
  for (const auto& b : buildings) {
    if (!b.size.valid()) throw std::invalid_argument("scenario: building with non-positive size");
  }
  for (const auto& b : buildings) {
    if (sdf(b, start.position) <= band.r_min) throw std::invalid_argument("scenario: start within r_min of a building");
    if (sdf(b, goal) <= band.r_min) throw std::invalid_argument("scenario: goal within r_min of a building");
  }
  const auto& t = config.trial;
  if (!(t.replan_interval > 0.0) || !(t.goal_tolerance > 0.0) || t.max_replans < 1 || !(t.audit_dt > 0.0) ||
      !(t.waypoint_dt > 0.0) || !(t.cem_export_dt > 0.0) || !(t.min_duration > 0.0)) {
    throw std::invalid_argument("scenario: bad trial config");
  }
  const double steps = t.replan_interval / t.waypoint_dt;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw std::invalid_argument("scenario: replan_interval must be a multiple of waypoint_dt");
  }
  config.cem.validate();
  config.scp.validate();
}

std::vector<Cuboid> building_faces(const Cuboid& b, double thickness) {
  const Vec2 c = b.pose.origin;
  const double psi = b.pose.yaw;
  const Vec2 n(std::cos(psi), std::sin(psi));
  const Vec2 t(-n.y(), n.x());
  const double h = b.size.height;
  const double hx = 0.5 * b.size.thickness, hy = 0.5 * b.size.length;
  return {
      Cuboid{GroundPose2D(c + hx * n, psi), CuboidSize{b.size.length, h, thickness}},
      Cuboid{GroundPose2D(c + hy * t, psi + 0.5 * std::numbers::pi), CuboidSize{b.size.thickness, h, thickness}},
      Cuboid{GroundPose2D(c - hx * n, psi + std::numbers::pi), CuboidSize{b.size.length, h, thickness}},
      Cuboid{GroundPose2D(c - hy * t, psi - 0.5 * std::numbers::pi), CuboidSize{b.size.thickness, h, thickness}},
  };
}

std::vector<Cuboid> scenario_faces(const Scenario& s) {
  std::vector<Cuboid> out;
  out.reserve(4 * s.buildings.size());
  for (const auto& b : s.buildings) {
    auto f = building_faces(b, s.config.perception.estimate.facade_thickness);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

// ---- generator -------------------------------------------------------------

namespace {

struct Rect {
  double x0, y0, x1, y1;

  bool overlaps(const Rect& o, double gap) const {
    return x0 < o.x1 + gap && o.x0 < x1 + gap && y0 < o.y1 + gap && o.y0 < y1 + gap;
  }
};

// Quarter turns counter-clockwise about the origin; rotating the south side
// once gives the east side.
Rect rotate(const Rect& r, int k) {
  std::array<Vec2, 2> p{Vec2(r.x0, r.y0), Vec2(r.x1, r.y1)};
  for (auto& v : p) {
    for (int i = 0; i < k; ++i) v = Vec2(-v.y(), v.x());
  }
  return {std::min(p[0].x(), p[1].x()), std::min(p[0].y(), p[1].y()), std::max(p[0].x(), p[1].x()),
          std::max(p[0].y(), p[1].y())};
}

Cuboid to_cuboid(const Rect& r, double height) {
  return Cuboid{GroundPose2D(Vec2(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)), 0.0),
                CuboidSize{r.y1 - r.y0, height, r.x1 - r.x0}};
}

}  // namespace

Scenario generate_square_street(std::uint64_t seed, const StreetParams& p) {
  if (p.n_buildings < 1) throw std::invalid_argument("generate_square_street: n_buildings must be >= 1");
  if (!(p.area > 0.0) || !(p.street_width > 0.0) || !(p.min_footprint > 0.0) ||
      p.max_footprint < p.min_footprint || !(p.min_height > 0.0) || p.max_height < p.min_height ||
      p.max_setback < 0.0 || p.min_gap < 0.0 || p.max_attempts < 1) {
    throw std::invalid_argument("generate_square_street: bad parameters");
  }
  const double side = std::sqrt(p.area);
  const double half = 0.5 * side;
  const double a = 0.25 * side;  // street centerline half-width of the loop
  const double e_in = a - 0.5 * p.street_width;
  const double e_out = a + 0.5 * p.street_width;
  if (e_in < p.max_footprint + p.max_setback || half - e_out < p.max_footprint + p.max_setback) {
    throw std::invalid_argument("generate_square_street: area too small for the street layout");
  }

  std::mt19937_64 rng(seed);
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  std::vector<Rect> rects;
  std::vector<double> heights;
  auto fits = [&](const Rect& r) {
    if (r.x0 < -half || r.y0 < -half || r.x1 > half || r.y1 > half) return false;
    return std::none_of(rects.begin(), rects.end(), [&](const Rect& o) { return r.overlaps(o, p.min_gap); });
  };
  auto place = [&](auto&& propose) {
    for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
      const Rect r = propose();
      const double h = uni(p.min_height, p.max_height);
      if (fits(r)) {
        rects.push_back(r);
        heights.push_back(h);
        return;
      }
    }
    throw std::runtime_error("generate_square_street: placement failed after bounded retries");
  };

  // Corner lots of the inner block, south-east first.
  const int corners = std::min(p.n_buildings, 4);
  for (int k = 0; k < corners; ++k) {
    place([&] {
      const double wx = uni(p.min_footprint, p.max_footprint), wy = uni(p.min_footprint, p.max_footprint);
      const double sx = uni(0.0, p.max_setback), sy = uni(0.0, p.max_setback);
      const double x1 = e_in - sx, y0 = -e_in + sy;
      return rotate(Rect{x1 - wx, y0, x1, y0 + wy}, k);
    });
  }
  for (int i = corners; i < p.n_buildings; ++i) {
    const int row = (i - corners) % 8;
    const int k = row / 2;
    const bool inner = row % 2 == 0;
    place([&] {
      const double wx = uni(p.min_footprint, p.max_footprint), wy = uni(p.min_footprint, p.max_footprint);
      const double s = uni(0.0, p.max_setback);
      const double lim = inner ? e_in : half;
      const double cx = uni(-lim + 0.5 * wx, lim - 0.5 * wx);
      const Rect r = inner ? Rect{cx - 0.5 * wx, -e_in + s, cx + 0.5 * wx, -e_in + s + wy}
                           : Rect{cx - 0.5 * wx, -e_out - s - wy, cx + 0.5 * wx, -e_out - s};
      return rotate(r, k);
    });
  }

  Scenario sc;
  sc.name = "square_street";
  sc.rng_seed = seed;
  for (std::size_t i = 0; i < rects.size(); ++i) sc.buildings.push_back(to_cuboid(rects[i], heights[i]));

  // The start-goal chord cuts corner_clip meters into the south-east lot.
  const Rect& lot = rects[0];
  const double reach = 2.0 * a - (lot.x1 - lot.y0) + p.corner_clip * std::numbers::sqrt2;
  sc.start.position = Vec3(a - reach, -a, p.flight_height);
  sc.goal = Vec3(a, -a + reach, p.flight_height);
  sc.bank_ref = BankSource{BankSource::Kind::Default, seed, 500, {}};
  sc.validate();
  return sc;
}

// ---- JSON ------------------------------------------------------------------

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

json counts_json(const GridCounts& c) { return json::array({c.yaw, c.size, c.origin}); }
GridCounts counts_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected grid counts [yaw, size, origin]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

json config_json(const PlannerConfigs& c) {
  const auto& m = c.cem;
  const auto& s = c.scp;
  const auto& pc = c.perception;
  const auto& t = c.trial;
  return json{
      {"cem",
       {{"population", m.population},
        {"elites", m.elites},
        {"iterations", m.iterations},
        {"init_std", m.init_std},
        {"mmd_weight", m.mmd_weight},
        {"cov_floor", m.cov_floor},
        {"degree", m.degree},
        {"eval_samples", m.eval_samples},
        {"goal_weight", m.goal_weight},
        {"counts", counts_json(m.counts)},
        {"bandwidth", m.bandwidth},
        {"bandwidth_floor", m.bandwidth_floor},
        {"failure_tolerance", m.failure_tolerance}}},
      {"scp",
       {{"candidates", s.candidates},
        {"scp_iterations", s.scp_iterations},
        {"trust_radius", s.trust_radius},
        {"inflate_quantile", s.inflate_quantile},
        {"stomp_scale", s.stomp_scale},
        {"counts", counts_json(s.counts)},
        {"bandwidth_floor", s.bandwidth_floor},
        {"penalty", s.penalty},
        {"fd_step", s.fd_step},
        {"move_tolerance", s.move_tolerance},
        {"max_trust_radius", s.max_trust_radius}}},
      {"perception",
       {{"cloud", {{"noise", pc.cloud.noise}, {"density", pc.cloud.density}, {"max_range", pc.cloud.max_range}}},
        {"estimate",
         {{"sigma_px", pc.estimate.sigma_px},
          {"ransac_threshold", pc.estimate.ransac_threshold},
          {"ransac_noise_factor", pc.estimate.ransac_noise_factor},
          {"ransac_iterations", pc.estimate.ransac_iterations},
          {"facade_thickness", pc.estimate.facade_thickness}}},
        {"segmentation_error", pc.segmentation_error}}},
      {"trial",
       {{"replan_interval", t.replan_interval},
        {"goal_tolerance", t.goal_tolerance},
        {"max_replans", t.max_replans},
        {"audit_dt", t.audit_dt},
        {"waypoint_dt", t.waypoint_dt},
        {"cem_export_dt", t.cem_export_dt},
        {"min_duration", t.min_duration}}},
  };
}

PlannerConfigs config_from(const json& j) {
  PlannerConfigs c;
  const json& m = j.at("cem");
  c.cem.population = m.at("population").get<int>();
  c.cem.elites = m.at("elites").get<int>();
  c.cem.iterations = m.at("iterations").get<int>();
  c.cem.init_std = m.at("init_std").get<double>();
  c.cem.mmd_weight = m.at("mmd_weight").get<double>();
  c.cem.cov_floor = m.at("cov_floor").get<double>();
  c.cem.degree = m.at("degree").get<int>();
  c.cem.eval_samples = m.at("eval_samples").get<int>();
  c.cem.goal_weight = m.at("goal_weight").get<double>();
  c.cem.counts = counts_from(m.at("counts"));
  c.cem.bandwidth = m.at("bandwidth").get<double>();
  c.cem.bandwidth_floor = m.at("bandwidth_floor").get<double>();
  c.cem.failure_tolerance = m.at("failure_tolerance").get<double>();
  const json& s = j.at("scp");
  c.scp.candidates = s.at("candidates").get<int>();
  c.scp.scp_iterations = s.at("scp_iterations").get<int>();
  c.scp.trust_radius = s.at("trust_radius").get<double>();
  c.scp.inflate_quantile = s.at("inflate_quantile").get<double>();
  c.scp.stomp_scale = s.at("stomp_scale").get<double>();
  c.scp.counts = counts_from(s.at("counts"));
  c.scp.bandwidth_floor = s.at("bandwidth_floor").get<double>();
  c.scp.penalty = s.at("penalty").get<double>();
  c.scp.fd_step = s.at("fd_step").get<double>();
  c.scp.move_tolerance = s.at("move_tolerance").get<double>();
  c.scp.max_trust_radius = s.at("max_trust_radius").get<double>();
  const json& p = j.at("perception");
  c.perception.cloud.noise = p.at("cloud").at("noise").get<double>();
  c.perception.cloud.density = p.at("cloud").at("density").get<double>();
  c.perception.cloud.max_range = p.at("cloud").at("max_range").get<double>();
  const json& e = p.at("estimate");
  c.perception.estimate.sigma_px = e.at("sigma_px").get<double>();
  c.perception.estimate.ransac_threshold = e.at("ransac_threshold").get<double>();
  c.perception.estimate.ransac_noise_factor = e.at("ransac_noise_factor").get<double>();
  c.perception.estimate.ransac_iterations = e.at("ransac_iterations").get<int>();
  c.perception.estimate.facade_thickness = e.at("facade_thickness").get<double>();
  c.perception.segmentation_error = p.at("segmentation_error").get<bool>();
  const json& t = j.at("trial");
  c.trial.replan_interval = t.at("replan_interval").get<double>();
  c.trial.goal_tolerance = t.at("goal_tolerance").get<double>();
  c.trial.max_replans = t.at("max_replans").get<int>();
  c.trial.audit_dt = t.at("audit_dt").get<double>();
  c.trial.waypoint_dt = t.at("waypoint_dt").get<double>();
  c.trial.cem_export_dt = t.at("cem_export_dt").get<double>();
  c.trial.min_duration = t.at("min_duration").get<double>();
  return c;
}

// Every key of `patch` must already exist in `base` (catches typos).
void check_known_keys(const json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) return;
  if (!base.is_object()) throw std::invalid_argument("config: '" + where + "' is not an object");
  for (const auto& [k, v] : patch.items()) {
    if (!base.contains(k)) throw std::invalid_argument("config: unknown key '" + where + k + "'");
    if (v.is_object()) check_known_keys(base.at(k), v, where + k + ".");
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Parse errors and missing keys surface as invalid_argument.
template <class Fn>
auto parse_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string config_to_json(const PlannerConfigs& c) { return dump(config_json(c)); }

void apply_config_json(Scenario& s, const std::string& text) {
  parse_guard("config", [&] {
    const json patch = json::parse(text);
    if (!patch.is_object()) throw std::invalid_argument("config: top level must be an object");
    json base = config_json(s.config);
    check_known_keys(base, patch, "");
    base.merge_patch(patch);
    PlannerConfigs c = config_from(base);
    c.cem.validate();
    c.scp.validate();
    s.config = c;
    return 0;
  });
}

std::string scenario_to_json(const Scenario& s) {
  json buildings = json::array();
  for (const auto& b : s.buildings) {
    buildings.push_back({{"origin", vec(b.pose.origin)},
                         {"yaw", b.pose.yaw},
                         {"length", b.size.length},
                         {"depth", b.size.thickness},
                         {"height", b.size.height}});
  }
  json bank;
  switch (s.bank_ref.kind) {
    case BankSource::Kind::Default:
      bank = {{"kind", "default"}, {"seed", s.bank_ref.seed}, {"size", s.bank_ref.size}};
      break;
    case BankSource::Kind::Zero:
      bank = {{"kind", "zero"}};
      break;
    case BankSource::Kind::File:
      bank = {{"kind", "file"}, {"path", s.bank_ref.path}};
      break;
  }
  const json j{
      {"name", s.name},
      {"rng_seed", s.rng_seed},
      {"buildings", buildings},
      {"start",
       {{"position", vec(s.start.position)},
        {"velocity", vec(s.start.velocity)},
        {"acceleration", vec(s.start.acceleration)}}},
      {"goal", vec(s.goal)},
      {"limits", {{"v_max", s.limits.v_max}, {"a_max", s.limits.a_max}, {"min_altitude", s.limits.min_altitude}}},
      {"band", {{"r_min", s.band.r_min}, {"r_max", s.band.r_max}}},
      {"bank", bank},
      {"camera", {{"hfov", s.camera.hfov}, {"width", s.camera.width}, {"height", s.camera.height}}},
      {"config", config_json(s.config)},
  };
  return dump(j);
}

Scenario scenario_from_json(const std::string& text) {
  return parse_guard("scenario", [&] {
    const json j = json::parse(text);
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& b : j.at("buildings")) {
      s.buildings.push_back(Cuboid{GroundPose2D(vec2(b.at("origin")), b.at("yaw").get<double>()),
                                   CuboidSize{b.at("length").get<double>(), b.at("height").get<double>(),
                                              b.at("depth").get<double>()}});
    }
    const json& st = j.at("start");
    s.start = BoundaryState{vec3(st.at("position")), vec3(st.at("velocity")), vec3(st.at("acceleration"))};
    s.goal = vec3(j.at("goal"));
    const auto& lj = j.at("limits");
    s.limits = Limits{lj.at("v_max").get<double>(), lj.at("a_max").get<double>(),
                      lj.value("min_altitude", Limits{}.min_altitude)};
    s.band = SafetyBand{j.at("band").at("r_min").get<double>(), j.at("band").at("r_max").get<double>()};
    const json& b = j.at("bank");
    const auto kind = b.at("kind").get<std::string>();
    if (kind == "default") {
      s.bank_ref = BankSource{BankSource::Kind::Default, b.at("seed").get<std::uint64_t>(), b.at("size").get<int>(), {}};
    } else if (kind == "zero") {
      s.bank_ref = BankSource{BankSource::Kind::Zero, 0, 0, {}};
    } else if (kind == "file") {
      s.bank_ref = BankSource{BankSource::Kind::File, 0, 0, b.at("path").get<std::string>()};
    } else {
      throw std::invalid_argument("scenario: unknown bank kind '" + kind + "'");
    }
    const json& c = j.at("camera");
    s.camera = CameraConfig{c.at("hfov").get<double>(), c.at("width").get<int>(), c.at("height").get<int>()};
    s.config = config_from(j.at("config"));
    s.validate();
    return s;
  });
}

void save_scenario(const Scenario& s, const std::string& path) { write_file(path, scenario_to_json(s)); }

Scenario load_scenario(const std::string& path) {
  Scenario s = scenario_from_json(read_file(path));
  s.source_dir = std::filesystem::path(path).parent_path().string();
  if (s.source_dir.empty()) s.source_dir = ".";
  return s;
}

std::string bank_to_json(const ErrorBank& b) {
  json yaw = json::array(), size = json::array(), origin = json::array();
  for (double v : b.yaw) yaw.push_back(v);
  for (const auto& v : b.size) size.push_back(vec(v));
  for (const auto& v : b.origin) origin.push_back(vec(v));
  return dump(json{{"yaw", yaw}, {"size", size}, {"origin", origin}});
}

ErrorBank bank_from_json(const std::string& text) {
  return parse_guard("bank", [&] {
    const json j = json::parse(text);
    ErrorBank b;
    for (const auto& v : j.at("yaw")) b.yaw.push_back(v.get<double>());
    for (const auto& v : j.at("size")) b.size.push_back(vec2(v));
    for (const auto& v : j.at("origin")) b.origin.push_back(vec2(v));
    b.validate();
    return b;
  });
}

void save_bank(const ErrorBank& b, const std::string& path) { write_file(path, bank_to_json(b)); }
ErrorBank load_bank(const std::string& path) { return bank_from_json(read_file(path)); }

ErrorBank resolve_bank(const Scenario& s) {
  switch (s.bank_ref.kind) {
    case BankSource::Kind::Default:
      return default_bank(s.bank_ref.seed, s.bank_ref.size);
    case BankSource::Kind::Zero:
      return ErrorBank::zero();
    case BankSource::Kind::File: {
      std::filesystem::path p(s.bank_ref.path);
      if (p.is_relative()) p = std::filesystem::path(s.source_dir) / p;
      return load_bank(p.string());
    }
  }
  throw std::logic_error("resolve_bank: unreachable");
}

}  // namespace mmdplan
