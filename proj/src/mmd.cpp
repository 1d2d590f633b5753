#include "mmdplan/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Core>

namespace mmdplan {

void SafetyBand::validate() const {
  if (!(r_min >= 0.0) || !(r_max > r_min)) {
    throw std::invalid_argument("SafetyBand: require 0 <= r_min < r_max");
  }
}

bool ViolationTensor::all_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

ViolationTensor violation_tensor(const SampleGrid& grid, const Vec3& q, const SafetyBand& band) {
  ViolationTensor t{grid.counts(), {}};
  t.values.resize(grid.size());
  const auto& packed = grid.packed();
  for (std::size_t s = 0; s < packed.size(); ++s) {
    t.values[s] = violation(packed[s].distance(q), band);
  }
  return t;
}

KernelConfig KernelConfig::uniform(GridCounts counts, double bandwidth) {
  auto flat = [](int n) { return std::vector<double>(n, 1.0 / n); };
  KernelConfig cfg;
  cfg.bandwidth = bandwidth;
  cfg.weights_psi = cfg.dirac_psi = flat(counts.yaw);
  cfg.weights_s = cfg.dirac_s = flat(counts.size);
  cfg.weights_o = cfg.dirac_o = flat(counts.origin);
  return cfg;
}

GridCounts KernelConfig::counts() const {
  return {static_cast<int>(weights_psi.size()), static_cast<int>(weights_s.size()),
          static_cast<int>(weights_o.size())};
}

void KernelConfig::validate() const {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("KernelConfig: bandwidth must be > 0");
  auto check = [](const std::vector<double>& w, const char* name) {
    if (w.empty()) throw std::invalid_argument(std::string("KernelConfig: empty ") + name);
    if (std::any_of(w.begin(), w.end(), [](double v) { return v < 0.0; })) {
      throw std::invalid_argument(std::string("KernelConfig: negative weight in ") + name);
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string("KernelConfig: weights do not sum to 1 in ") + name);
    }
  };
  check(weights_psi, "weights_psi");
  check(weights_s, "weights_s");
  check(weights_o, "weights_o");
  check(dirac_psi, "dirac_psi");
  check(dirac_s, "dirac_s");
  check(dirac_o, "dirac_o");
  if (dirac_psi.size() != weights_psi.size() || dirac_s.size() != weights_s.size() ||
      dirac_o.size() != weights_o.size()) {
    throw std::invalid_argument("KernelConfig: Dirac weights must match sample weights in shape");
  }
}

double mmd_point(const ViolationTensor& t, const KernelConfig& cfg) {
  const GridCounts c = cfg.counts();
  if (c.yaw != t.counts.yaw || c.size != t.counts.size || c.origin != t.counts.origin ||
      t.values.size() != static_cast<std::size_t>(c.total())) {
    throw std::invalid_argument("mmd_point: tensor shape does not match kernel weights");
  }
  if (t.all_zero()) return 0.0;

  // Row vectors C_k (over the flattened (i, j) index, one per origin index k)
  // for both embeddings. The quadratic forms are summed over every (k, k')
  // block pair, so the value is the full double sum over samples.
  const int nij = c.yaw * c.size;
  const double inv2s2 = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
  Eigen::MatrixXd cf(c.origin, nij);  // C_{alpha beta / gamma_k}
  Eigen::MatrixXd cd(c.origin, nij);  // C_{lambda phi / theta_k}
  Eigen::MatrixXd fv(c.origin, nij);  // f-bar_{ijk} in block layout
  for (int k = 0; k < c.origin; ++k) {
    for (int i = 0; i < c.yaw; ++i) {
      for (int j = 0; j < c.size; ++j) {
        const int col = i * c.size + j;
        cf(k, col) = cfg.weights_psi[i] * cfg.weights_s[j] * cfg.weights_o[k];
        cd(k, col) = cfg.dirac_psi[i] * cfg.dirac_s[j] * cfg.dirac_o[k];
        fv(k, col) = t.at(i, j, k);
      }
    }
  }

  double ff = 0.0;
  double fd = 0.0;
  double dd = 0.0;
  Eigen::MatrixXd block(nij, nij);
  for (int k = 0; k < c.origin; ++k) {
    // K_{f delta}^k: every row is [k(f_{a k}, 0)]_a.
    const Eigen::RowVectorXd kf0 =
        (-(fv.row(k).array().square()) * inv2s2).exp().matrix();
    fd += cf.row(k).dot(kf0) * cd.sum();
    for (int kk = k; kk < c.origin; ++kk) {
      for (int a = 0; a < nij; ++a) {
        for (int b = 0; b < nij; ++b) {
          const double d = fv(k, a) - fv(kk, b);
          block(a, b) = std::exp(-d * d * inv2s2);
        }
      }
      const double q = cf.row(k) * block * cf.row(kk).transpose();
      ff += (kk == k) ? q : 2.0 * q;
    }
  }
  // K_{delta delta} is all ones.
  const double sd = cd.sum();
  dd = sd * sd;
  return std::max(ff - 2.0 * fd + dd, 0.0);
}

namespace {

bool provably_in_band(const SampleGrid& g, const Vec3& q, const SafetyBand& band) {
  const double d = sdf(g.nominal(), q);
  const double h = g.max_deviation();
  return d - h >= band.r_min && d + h <= band.r_max;
}

}  // namespace

double mmd_trajectory(std::span<const SampleGrid> world, std::span<const Vec3> queries,
                      const SafetyBand& band, const KernelConfig& cfg) {
  if (queries.empty()) throw std::invalid_argument("mmd_trajectory: no query points");
  double total = 0.0;
  for (const Vec3& q : queries) {
    for (const SampleGrid& g : world) {
      if (provably_in_band(g, q, band)) continue;
      total += mmd_point(violation_tensor(g, q, band), cfg);
    }
  }
  return total;
}

std::vector<double> violation_samples(std::span<const SampleGrid> world,
                                      std::span<const Vec3> queries, const SafetyBand& band) {
  std::vector<double> out;
  for (const Vec3& q : queries) {
    for (const SampleGrid& g : world) {
      const auto t = violation_tensor(g, q, band);
      out.insert(out.end(), t.values.begin(), t.values.end());
    }
  }
  return out;
}

double median_bandwidth(std::span<const double> violations, double floor) {
  std::vector<double> pos;
  for (double v : violations) {
    if (v > 0.0) pos.push_back(v);
  }
  if (pos.empty()) return floor;
  const auto mid = pos.begin() + static_cast<std::ptrdiff_t>(pos.size() / 2);
  std::nth_element(pos.begin(), mid, pos.end());
  double med = *mid;
  if (pos.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(pos.begin(), mid));
  }
  return std::max(med, floor);
}

}  // namespace mmdplan
