#include "mmdplan/voxel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace mmdplan {

std::size_t VoxelGrid::occupied() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

void VoxelGrid::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("VoxelGrid: resolution must be > 0");
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) throw std::invalid_argument("VoxelGrid: dims must be positive");
  if (occupancy.size() != count()) throw std::invalid_argument("VoxelGrid: occupancy shape mismatch");
}

VoxelGrid rasterize(std::span<const Cuboid> cuboids, double resolution, double padding, std::int64_t voxel_cap) {
  if (!(resolution > 0.0)) throw std::invalid_argument("rasterize: resolution must be > 0");
  if (!(padding >= 0.0)) throw std::invalid_argument("rasterize: padding must be >= 0");
  Vec3 lo = Vec3::Constant(-padding), hi = Vec3::Constant(padding);
  if (!cuboids.empty()) {
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& c : cuboids) {
      for (const Vec3& v : c.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
    }
    lo.array() -= padding;
    hi.array() += padding;
  }
  VoxelGrid g;
  g.origin = lo;
  g.resolution = resolution;
  std::int64_t total = 1;
  for (int a = 0; a < 3; ++a) {
    g.dims[a] = std::max(1, static_cast<int>(std::ceil((hi(a) - lo(a)) / resolution)));
    total *= g.dims[a];
    if (total > voxel_cap) throw std::length_error("rasterize: grid exceeds the voxel cap");
  }
  g.occupancy.assign(g.count(), 0);

  const double half = 0.5 * resolution;
  for (const auto& c : cuboids) {
    const PackedCuboid pc(c);
    Vec3 clo = Vec3::Constant(std::numeric_limits<double>::infinity()), chi = -clo;
    for (const Vec3& v : c.vertices()) {
      clo = clo.cwiseMin(v);
      chi = chi.cwiseMax(v);
    }
    std::array<int, 3> i0, i1;
    for (int a = 0; a < 3; ++a) {
      i0[a] = std::clamp(static_cast<int>(std::floor((clo(a) - half - lo(a)) / resolution)), 0, g.dims[a] - 1);
      i1[a] = std::clamp(static_cast<int>(std::ceil((chi(a) + half - lo(a)) / resolution)), 0, g.dims[a] - 1);
    }
    for (int k = i0[2]; k <= i1[2]; ++k)
      for (int j = i0[1]; j <= i1[1]; ++j)
        for (int i = i0[0]; i <= i1[0]; ++i) {
          if (pc.distance(g.center(i, j, k)) <= half) g.occupancy[g.index(i, j, k)] = 1;
        }
  }
  return g;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of f (Felzenszwalb & Huttenlocher) over
// `n` samples spaced `stride` apart, in place.
void dt1d(double* f, int n, std::size_t stride, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  d.resize(n);
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((fq + double(q) * q) - (f[p * stride] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;  // line entirely free; stays +inf
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j] * stride];
  }
  for (int q = 0; q < n; ++q) f[q * stride] = d[q];
}

}  // namespace

DistanceField edt(const VoxelGrid& grid) {
  grid.validate();
  if (grid.occupied() == 0) throw std::invalid_argument("edt: grid has no occupied voxel");
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  std::vector<double> f(grid.count());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = grid.occupancy[i] ? 0.0 : kInf;

  std::vector<double> d, z;
  std::vector<int> v;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) dt1d(&f[k * sz + j * sy], nx, sx, d, v, z);
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i) dt1d(&f[k * sz + i], ny, sy, d, v, z);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) dt1d(&f[j * sy + i], nz, sz, d, v, z);

  DistanceField out{grid.origin, grid.resolution, grid.dims, std::move(f)};
  for (double& x : out.distances) x = std::sqrt(x) * grid.resolution;
  return out;
}

double DistanceField::lookup(const Vec3& q) const {
  double u[3];
  int i0[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp((q(a) - origin(a)) / resolution - 0.5, 0.0, double(dims[a] - 1));
    i0[a] = std::min(static_cast<int>(c), std::max(dims[a] - 2, 0));
    u[a] = c - i0[a];
  }
  auto val = [&](int di, int dj, int dk) {
    return at(std::min(i0[0] + di, dims[0] - 1), std::min(i0[1] + dj, dims[1] - 1), std::min(i0[2] + dk, dims[2] - 1));
  };
  double r = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? u[0] : 1 - u[0]) * (dj ? u[1] : 1 - u[1]) * (dk ? u[2] : 1 - u[2]);
        if (w != 0.0) r += w * val(di, dj, dk);
      }
  return r;
}

std::vector<double> DistanceField::lookup(std::span<const Vec3> queries) const {
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = lookup(queries[i]);
  return out;
}

namespace {

template <class Fn>
double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

QueryBenchResult query_bench(std::span<const Cuboid> world, const QueryBenchConfig& cfg) {
  if (world.empty()) throw std::invalid_argument("query_bench: world is empty");
  if (cfg.repeats < 1) throw std::invalid_argument("query_bench: repeats must be >= 1");
  QueryBenchResult res;
  res.tolerance = cfg.resolution * (std::sqrt(3.0) + 1.0);

  VoxelGrid grid;
  DistanceField field;
  std::vector<double> build;
  for (int r = 0; r < cfg.repeats; ++r) {
    build.push_back(seconds([&] {
      grid = rasterize(world, cfg.resolution, cfg.padding, cfg.voxel_cap);
      field = edt(grid);
    }));
  }
  res.voxels = grid.count();
  const auto [build_m, build_s] = mean_std(build);
  res.rows.push_back({"edt_build", 0, build_m, build_s});

  // Queries fill the span of voxel centers.
  const Vec3 lo = grid.center(0, 0, 0);
  const Vec3 hi = grid.center(grid.dims[0] - 1, grid.dims[1] - 1, grid.dims[2] - 1);
  std::mt19937_64 rng(cfg.seed);
  for (int count : cfg.counts) {
    if (count < 1) throw std::invalid_argument("query_bench: counts must be >= 1");
    std::vector<Vec3> q(static_cast<std::size_t>(count));
    for (auto& p : q) {
      for (int a = 0; a < 3; ++a) p(a) = std::uniform_real_distribution<double>(lo(a), hi(a))(rng);
    }
    std::vector<double> ts, tl, ta;
    std::vector<double> a, b;
    for (int r = 0; r < cfg.repeats; ++r) {
      ts.push_back(seconds([&] { a = min_sdf_batch(world, q); }));
      tl.push_back(seconds([&] { b = field.lookup(q); }));
      ta.push_back(tl.back() + build[r]);
    }
    for (std::size_t i = 0; i < q.size(); ++i) res.max_disagreement = std::max(res.max_disagreement, std::abs(a[i] - b[i]));
    const auto [sm, ss] = mean_std(ts);
    const auto [lm, ls] = mean_std(tl);
    const auto [am, as] = mean_std(ta);
    res.rows.push_back({"sdf", count, sm, ss});
    res.rows.push_back({"edt_lookup", count, lm, ls});
    res.rows.push_back({"edt_amortized", count, am, as});
  }
  return res;
}

void write_query_bench(std::ostream& os, const QueryBenchResult& r) {
  const auto old = os.precision(9);
  os << "method,count,mean_s,std_s\n";
  for (const auto& row : r.rows) os << row.method << ',' << row.count << ',' << row.mean_s << ',' << row.std_s << '\n';
  os.precision(old);
}

}  // namespace mmdplan
