#include "brainprompt/resample.hpp"

#include <cmath>

namespace brainprompt {
namespace {

// Tolerance for treating a coordinate that lands a rounding error outside
// the lattice as lying on its boundary.
constexpr double kEdgeEps = 1e-6;

struct Axis1D {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  double frac = 0.0;
};

// Coordinates this close to a lattice point are snapped onto it so that an
// identity mapping reproduces the source exactly.
constexpr double kSnapEps = 1e-9;

bool bracket(double x, std::int64_t n, Axis1D& out) {
  if (x < -kEdgeEps || x > static_cast<double>(n - 1) + kEdgeEps) return false;
  if (const double r = std::round(x); std::abs(x - r) < kSnapEps) x = r;
  const double fl = std::floor(x);
  out.lo = static_cast<std::int64_t>(fl);
  out.frac = x - fl;
  if (out.lo < 0) {
    out.lo = 0;
    out.frac = 0.0;
  }
  if (out.lo >= n - 1) {
    out.lo = n - 1;
    out.frac = 0.0;
  }
  out.hi = std::min(out.lo + 1, n - 1);
  return true;
}

bool round_half_up(double x, std::int64_t n, std::int64_t& out) {
  if (const double r = std::round(x); std::abs(x - r) < kSnapEps) x = r;
  const double r = std::floor(x + 0.5);
  if (r < 0.0 || r > static_cast<double>(n - 1)) return false;
  out = static_cast<std::int64_t>(r);
  return true;
}

template <typename Sample>
std::vector<double> sample_grid(const GridSpec& source, const GridSpec& target, Sample&& sample) {
  const Affine m = index_mapping(source, target);
  const Dims& t = target.dims;
  std::vector<double> out(t.count());
  std::size_t idx = 0;
  for (std::int64_t k = 0; k < t.nz; ++k) {
    for (std::int64_t j = 0; j < t.ny; ++j) {
      const Eigen::Vector3d row = m.block<3, 1>(0, 1) * static_cast<double>(j) +
                                  m.block<3, 1>(0, 2) * static_cast<double>(k) +
                                  m.block<3, 1>(0, 3);
      for (std::int64_t i = 0; i < t.nx; ++i) {
        const Eigen::Vector3d p = row + m.block<3, 1>(0, 0) * static_cast<double>(i);
        out[idx++] = sample(p);
      }
    }
  }
  return out;
}

std::vector<double> sample_nearest(const GridSpec& grid, std::span<const double> values,
                                   const GridSpec& target) {
  const Dims& s = grid.dims;
  return sample_grid(grid, target, [&](const Eigen::Vector3d& p) {
    std::int64_t i, j, k;
    if (!round_half_up(p.x(), s.nx, i) || !round_half_up(p.y(), s.ny, j) ||
        !round_half_up(p.z(), s.nz, k)) {
      return 0.0;
    }
    return values[grid.index(i, j, k)];
  });
}

}  // namespace

Affine index_mapping(const GridSpec& source, const GridSpec& target) {
  source.validate();
  target.validate();
  return source.affine.inverse() * target.affine;
}

Volume resample(const Volume& source, const GridSpec& target, Interpolation interp) {
  const GridSpec& g = source.grid();
  const Dims& s = g.dims;
  const auto values = source.data();

  if (interp == Interpolation::Nearest) {
    return Volume(target, sample_nearest(g, values, target), source.storage());
  }

  auto out = sample_grid(g, target, [&](const Eigen::Vector3d& p) {
    Axis1D x, y, z;
    if (!bracket(p.x(), s.nx, x) || !bracket(p.y(), s.ny, y) || !bracket(p.z(), s.nz, z)) {
      return 0.0;
    }
    auto v = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return values[g.index(i, j, k)]; };
    const double c00 = v(x.lo, y.lo, z.lo) * (1 - x.frac) + v(x.hi, y.lo, z.lo) * x.frac;
    const double c10 = v(x.lo, y.hi, z.lo) * (1 - x.frac) + v(x.hi, y.hi, z.lo) * x.frac;
    const double c01 = v(x.lo, y.lo, z.hi) * (1 - x.frac) + v(x.hi, y.lo, z.hi) * x.frac;
    const double c11 = v(x.lo, y.hi, z.hi) * (1 - x.frac) + v(x.hi, y.hi, z.hi) * x.frac;
    const double c0 = c00 * (1 - y.frac) + c10 * y.frac;
    const double c1 = c01 * (1 - y.frac) + c11 * y.frac;
    return c0 * (1 - z.frac) + c1 * z.frac;
  });
  return Volume(target, std::move(out), Datatype::Float32);
}

Mask3D resample(const Mask3D& source, const GridSpec& target) {
  const std::vector<double> values(source.bits().begin(), source.bits().end());
  const auto sampled = sample_nearest(source.grid(), values, target);
  return Mask3D(target, std::vector<std::uint8_t>(sampled.begin(), sampled.end()));
}

}  // namespace brainprompt
