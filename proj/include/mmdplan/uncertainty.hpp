#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mmdplan/geometry.hpp"

namespace mmdplan {

/// Empirical, non-parametric facade parameter errors (estimate minus truth).
/// Size errors are over (length, height); origin errors are ground-plane.
struct ErrorBank {
  std::vector<double> yaw;
  std::vector<Vec2> size;
  std::vector<Vec2> origin;

  /// Throws std::invalid_argument if any array is empty or non-finite.
  void validate() const;
  bool is_zero() const;

  static ErrorBank zero() { return {{0.0}, {Vec2::Zero()}, {Vec2::Zero()}}; }
};

struct UncertainCuboid {
  Cuboid nominal;
  ErrorBank bank;
};

struct GridCounts {
  int yaw{4};
  int size{4};
  int origin{4};

  int total() const { return yaw * size * origin; }
};

/// n_yaw x n_size x n_origin perturbed realizations of one facade, stored flat
/// with the origin index fastest.
class SampleGrid {
 public:
  SampleGrid() = default;
  SampleGrid(GridCounts counts, std::vector<Cuboid> cuboids);

  const GridCounts& counts() const { return counts_; }
  const Cuboid& at(int i, int j, int k) const {
    return cuboids_[(static_cast<std::size_t>(i) * counts_.size + j) * counts_.origin + k];
  }
  const std::vector<Cuboid>& flat() const { return cuboids_; }
  const std::vector<PackedCuboid>& packed() const { return packed_; }
  std::size_t size() const { return cuboids_.size(); }

  /// Upper bound on |sdf(sample, q) - sdf(nominal, q)| over all samples and q.
  double max_deviation() const { return max_deviation_; }
  const Cuboid& nominal() const { return nominal_; }
  void set_nominal(const Cuboid& nominal);

 private:
  GridCounts counts_{};
  std::vector<Cuboid> cuboids_;
  std::vector<PackedCuboid> packed_;
  Cuboid nominal_{};
  double max_deviation_{0.0};
};

inline constexpr double kMinPerturbedSize = 0.05;

/// Bootstrap draw: each axis resamples its bank array uniformly with replacement.
SampleGrid draw_grid(const UncertainCuboid& u, GridCounts counts, std::uint64_t seed);

/// `n` independent (yaw, size, origin) realizations drawn from the bank.
std::vector<Cuboid> draw_realizations(const UncertainCuboid& u, int n, std::uint64_t seed);

/// SplitMix64 finalizer over (seed, salt); used to give every obstacle and
/// stage its own stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Two-component Gaussian mixture.
struct Mixture2 {
  double weight_a;
  double mean_a;
  double std_a;
  double mean_b;
  double std_b;
};

struct DefaultBankParams {
  Mixture2 yaw{0.6, -0.05, 0.03, 0.12, 0.05};
  Mixture2 size{0.7, -0.8, 0.5, 1.5, 0.8};
  Mixture2 origin{0.5, -0.6, 0.4, 0.9, 0.6};
};

/// Synthetic, deliberately skewed stand-in for a calibrated bank.
ErrorBank default_bank(std::uint64_t seed, int n, const DefaultBankParams& params = {});

/// Bank of (estimated - truth) differences; yaw differences are wrapped.
ErrorBank calibrate_bank(const std::vector<std::pair<Cuboid, Cuboid>>& pairs);

}  // namespace mmdplan
