#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmdplan/geometry.hpp"

namespace mmdplan {

inline constexpr std::int64_t kDefaultVoxelCap = 64'000'000;

/// Axis-aligned occupancy grid; voxel (i, j, k) has its center at
/// origin + (i + 1/2, j + 1/2, k + 1/2) * resolution. x is the fastest index.
struct VoxelGrid {
  Vec3 origin{Vec3::Zero()};
  double resolution{0.25};
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> occupancy;

  std::size_t count() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 center(int i, int j, int k) const {
    return origin + resolution * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  std::size_t occupied() const;
  void validate() const;
};

struct DistanceField {
  Vec3 origin{Vec3::Zero()};
  double resolution{0.25};
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> distances;  // meters, same layout as VoxelGrid

  double at(int i, int j, int k) const {
    return distances[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
  }
  /// Trilinear interpolation between voxel centers; queries are clamped to
  /// the span of centers.
  double lookup(const Vec3& q) const;
  std::vector<double> lookup(std::span<const Vec3> queries) const;
};

/// Marks every voxel whose center has sdf <= resolution / 2 to some cuboid.
/// Bounds cover all cuboids plus `padding`; an empty list gives the free box
/// [-padding, padding]^3.
VoxelGrid rasterize(std::span<const Cuboid> cuboids, double resolution, double padding,
                    std::int64_t voxel_cap = kDefaultVoxelCap);

/// Exact separable EDT (lower envelope of parabolas) between voxel centers.
DistanceField edt(const VoxelGrid& grid);

struct QueryBenchRow {
  std::string method;
  int count{0};
  double mean_s{0.0};
  double std_s{0.0};
};

struct QueryBenchResult {
  std::vector<QueryBenchRow> rows;
  double max_disagreement{0.0};  // max |edt lookup - sdf| over all timed queries
  double tolerance{0.0};         // resolution * (sqrt(3) + 1)
  std::size_t voxels{0};
};

struct QueryBenchConfig {
  std::vector<int> counts{50'000, 100'000, 150'000};
  double resolution{0.25};
  double padding{2.0};
  int repeats{5};
  std::uint64_t seed{0};
  std::int64_t voxel_cap{kDefaultVoxelCap};
};

/// Times batched analytical queries ("sdf"), EDT trilinear lookups
/// ("edt_lookup"), the EDT build ("edt_build", count 0) and lookup plus one
/// build per batch ("edt_amortized").
QueryBenchResult query_bench(std::span<const Cuboid> world, const QueryBenchConfig& cfg);

/// `method,count,mean_s,std_s`
void write_query_bench(std::ostream& os, const QueryBenchResult& r);

}  // namespace mmdplan
