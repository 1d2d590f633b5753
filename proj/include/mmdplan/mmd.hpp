#pragma once

#include <span>
#include <vector>

#include "mmdplan/geometry.hpp"
#include "mmdplan/uncertainty.hpp"

namespace mmdplan {

/// Desired clearance corridor [r_min, r_max] in meters.
struct SafetyBand {
  double r_min{1.0};
  double r_max{10.0};

  void validate() const;
};

/// max(d - r_max, 0) + max(r_min - d, 0)
inline double violation(double d, const SafetyBand& band) {
  return std::max(d - band.r_max, 0.0) + std::max(band.r_min - d, 0.0);
}

/// Constraint violations over a sample grid at one query point, laid out like
/// SampleGrid (origin index fastest).
struct ViolationTensor {
  GridCounts counts;
  std::vector<double> values;

  double at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(i) * counts.size + j) * counts.origin + k];
  }
  bool all_zero() const;
};

ViolationTensor violation_tensor(const SampleGrid& grid, const Vec3& q, const SafetyBand& band);

/// RBF kernel bandwidth plus per-axis sample weights for the violation
/// embedding (alpha, beta, gamma) and for the Dirac embedding (lambda, phi, theta).
struct KernelConfig {
  double bandwidth{0.5};
  std::vector<double> weights_psi;
  std::vector<double> weights_s;
  std::vector<double> weights_o;
  std::vector<double> dirac_psi;
  std::vector<double> dirac_s;
  std::vector<double> dirac_o;

  /// 1/n weights on every axis, both embeddings.
  static KernelConfig uniform(GridCounts counts, double bandwidth);
  void validate() const;
  GridCounts counts() const;
};

inline double rbf_kernel(double a, double b, double sigma) {
  const double d = a - b;
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

/// Squared RKHS distance between the violation embedding and the Dirac-at-zero
/// embedding, evaluated through the kernel-matrix expansion. Clamped at 0.
double mmd_point(const ViolationTensor& t, const KernelConfig& cfg);

/// Sum of mmd_point over every (query, obstacle) pair. Pairs whose violations
/// are provably all zero (nominal distance inside the band by more than the
/// grid's deviation bound) are skipped; they contribute exactly 0.
double mmd_trajectory(std::span<const SampleGrid> world, std::span<const Vec3> queries,
                      const SafetyBand& band, const KernelConfig& cfg);

/// Every f-bar sample over (query, obstacle, grid entry), in that order.
std::vector<double> violation_samples(std::span<const SampleGrid> world,
                                      std::span<const Vec3> queries, const SafetyBand& band);

/// Median of the strictly positive entries, floored at `floor`.
double median_bandwidth(std::span<const double> violations, double floor = 0.5);

}  // namespace mmdplan
