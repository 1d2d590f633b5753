#include "mmdplan/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mmdplan {

void ErrorBank::validate() const {
  if (yaw.empty() || size.empty() || origin.empty()) {
    throw std::invalid_argument("error bank: every array must be non-empty");
  }
  auto finite2 = [](const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); };
  if (!std::all_of(yaw.begin(), yaw.end(), [](double v) { return std::isfinite(v); }) ||
      !std::all_of(size.begin(), size.end(), finite2) ||
      !std::all_of(origin.begin(), origin.end(), finite2)) {
    throw std::invalid_argument("error bank: non-finite entry");
  }
}

bool ErrorBank::is_zero() const {
  return std::all_of(yaw.begin(), yaw.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(size.begin(), size.end(), [](const Vec2& v) { return v.isZero(0.0); }) &&
         std::all_of(origin.begin(), origin.end(), [](const Vec2& v) { return v.isZero(0.0); });
}

namespace {

// Hausdorff distance between two convex cuboids is bounded by the largest
// displacement of corresponding vertices.
double vertex_displacement(const Cuboid& a, const Cuboid& b) {
  const auto va = a.vertices();
  const auto vb = b.vertices();
  double m = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, (va[i] - vb[i]).norm());
  return m;
}

Cuboid perturb(const Cuboid& nominal, double dyaw, const Vec2& dsize, const Vec2& dorigin) {
  Cuboid c = nominal;
  c.pose = GroundPose2D(nominal.pose.origin + dorigin, nominal.pose.yaw + dyaw);
  c.size.length = std::max(nominal.size.length + dsize.x(), kMinPerturbedSize);
  c.size.height = std::max(nominal.size.height + dsize.y(), kMinPerturbedSize);
  return c;
}

}  // namespace

SampleGrid::SampleGrid(GridCounts counts, std::vector<Cuboid> cuboids)
    : counts_(counts), cuboids_(std::move(cuboids)) {
  if (counts_.yaw < 1 || counts_.size < 1 || counts_.origin < 1 ||
      cuboids_.size() != static_cast<std::size_t>(counts_.total())) {
    throw std::invalid_argument("SampleGrid: shape does not match counts");
  }
  packed_.reserve(cuboids_.size());
  for (const auto& c : cuboids_) packed_.emplace_back(c);
}

void SampleGrid::set_nominal(const Cuboid& nominal) {
  nominal_ = nominal;
  max_deviation_ = 0.0;
  for (const auto& c : cuboids_) max_deviation_ = std::max(max_deviation_, vertex_displacement(c, nominal));
}

SampleGrid draw_grid(const UncertainCuboid& u, GridCounts counts, std::uint64_t seed) {
  if (counts.yaw < 1 || counts.size < 1 || counts.origin < 1) {
    throw std::invalid_argument("draw_grid: counts must be >= 1");
  }
  u.bank.validate();
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::vector<double> dyaw(counts.yaw);
  std::vector<Vec2> dsize(counts.size), dorigin(counts.origin);
  for (auto& v : dyaw) v = u.bank.yaw[pick(u.bank.yaw.size())];
  for (auto& v : dsize) v = u.bank.size[pick(u.bank.size.size())];
  for (auto& v : dorigin) v = u.bank.origin[pick(u.bank.origin.size())];

  std::vector<Cuboid> cuboids;
  cuboids.reserve(counts.total());
  for (int i = 0; i < counts.yaw; ++i) {
    for (int j = 0; j < counts.size; ++j) {
      for (int k = 0; k < counts.origin; ++k) {
        cuboids.push_back(perturb(u.nominal, dyaw[i], dsize[j], dorigin[k]));
      }
    }
  }
  SampleGrid grid(counts, std::move(cuboids));
  grid.set_nominal(u.nominal);
  return grid;
}

std::vector<Cuboid> draw_realizations(const UncertainCuboid& u, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw_realizations: n must be >= 1");
  u.bank.validate();
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t m) {
    return std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
  };
  std::vector<Cuboid> out;
  out.reserve(n);
  for (int s = 0; s < n; ++s) {
    const double dy = u.bank.yaw[pick(u.bank.yaw.size())];
    const Vec2 ds = u.bank.size[pick(u.bank.size.size())];
    const Vec2 dp = u.bank.origin[pick(u.bank.origin.size())];
    out.push_back(perturb(u.nominal, dy, ds, dp));
  }
  return out;
}

ErrorBank default_bank(std::uint64_t seed, int n, const DefaultBankParams& params) {
  if (n < 2) throw std::invalid_argument("default_bank: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto sample = [&](const Mixture2& m) {
    const bool a = unit(rng) < m.weight_a;
    const double z = gauss(rng);
    return a ? m.mean_a + m.std_a * z : m.mean_b + m.std_b * z;
  };
  ErrorBank bank;
  bank.yaw.resize(n);
  bank.size.resize(n);
  bank.origin.resize(n);
  for (int i = 0; i < n; ++i) {
    bank.yaw[i] = sample(params.yaw);
    bank.size[i] = Vec2(sample(params.size), sample(params.size));
    bank.origin[i] = Vec2(sample(params.origin), sample(params.origin));
  }
  return bank;
}

ErrorBank calibrate_bank(const std::vector<std::pair<Cuboid, Cuboid>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("calibrate_bank: no (estimate, truth) pairs");
  ErrorBank bank;
  for (const auto& [est, truth] : pairs) {
    bank.yaw.push_back(wrap_angle(est.pose.yaw - truth.pose.yaw));
    bank.size.emplace_back(est.size.length - truth.size.length, est.size.height - truth.size.height);
    bank.origin.push_back(est.pose.origin - truth.pose.origin);
  }
  return bank;
}

}  // namespace mmdplan
