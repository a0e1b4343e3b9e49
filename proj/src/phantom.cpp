#include "brainprompt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace brainprompt {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

Ellipsoid grown(const Ellipsoid& e, double by) {
  return {e.center, {e.semi_axes[0] + by, e.semi_axes[1] + by, e.semi_axes[2] + by}};
}

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256::normal() noexcept {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

bool Ellipsoid::contains(double x, double y, double z) const noexcept {
  const double dx = (x - center[0]) / semi_axes[0];
  const double dy = (y - center[1]) / semi_axes[1];
  const double dz = (z - center[2]) / semi_axes[2];
  return dx * dx + dy * dy + dz * dz <= 1.0;
}

Vec3 PhantomSpec::center() const noexcept {
  return {(dims.nx - 1) / 2.0, (dims.ny - 1) / 2.0, (dims.nz - 1) / 2.0};
}

void PhantomSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::SpecOutOfBounds, msg); };
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) fail("dims must be positive");
  if (skull_offset < 0.0) fail("skull offset must be >= 0");
  if (skull_thickness < 1.0 || scalp_thickness < 1.0) fail("shell thicknesses must be >= 1");
  for (double v : {background_intensity, brain_intensity, skull_intensity, scalp_intensity}) {
    if (!(v >= 0.0)) fail("intensities must be non-negative");
  }
  if (!(noise_sigma >= 0.0)) fail("noise sigma must be non-negative");

  const Vec3 c = center();
  const double outer = skull_offset + skull_thickness + scalp_thickness;
  for (int a = 0; a < 3; ++a) {
    const double semi = brain_semi_axes[a];
    if (!(semi > 0.0)) fail("brain semi-axes must be positive");
    if (semi + outer > c[a]) fail("head does not fit inside the grid along axis " + std::to_string(a));
  }
  if (lesion) {
    if (!(lesion->intensity >= 0.0)) fail("lesion intensity must be non-negative");
    for (int a = 0; a < 3; ++a) {
      const double semi = lesion->shape.semi_axes[a];
      const double ctr = lesion->shape.center[a];
      if (!(semi > 0.0)) fail("lesion semi-axes must be positive");
      if (ctr - semi < 0.0 || ctr + semi > static_cast<double>(dims[a] - 1)) fail("lesion leaves the grid");
    }
  }
}

PhantomSpec phantom_spec_for(const Dims& dims) {
  PhantomSpec s;
  s.dims = dims;
  const Vec3 base = s.brain_semi_axes;
  const Vec3 c = s.center();
  const double outer = s.skull_offset + s.skull_thickness + s.scalp_thickness;
  double scale = std::min({dims.nx, dims.ny, dims.nz}) / 96.0;
  for (int a = 0; a < 3; ++a) scale = std::min(scale, (c[a] - outer - 1.0) / base[a]);
  if (scale > 0.0) s.brain_semi_axes = {base[0] * scale, base[1] * scale, base[2] * scale};
  return s;
}

LesionSpec near_surface_lesion(const PhantomSpec& spec, double radius, double depth) {
  LesionSpec l;
  l.shape.center = spec.center();
  l.shape.center[0] += spec.brain_semi_axes[0] - depth - radius;
  l.shape.semi_axes = {radius, radius, radius};
  return l;
}

GridSpec phantom_grid(const Dims& dims) {
  return GridSpec::axis_aligned(dims, {1.0, 1.0, 1.0},
                                {-(dims.nx - 1) / 2.0, -(dims.ny - 1) / 2.0, -(dims.nz - 1) / 2.0});
}

Phantom make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Ellipsoid brain{spec.center(), spec.brain_semi_axes};
  const Ellipsoid gap_outer = grown(brain, spec.skull_offset);
  const Ellipsoid skull_outer = grown(gap_outer, spec.skull_thickness);
  const Ellipsoid scalp_outer = grown(skull_outer, spec.scalp_thickness);

  const Dims& d = spec.dims;
  std::vector<double> values(d.count(), spec.background_intensity);
  std::vector<std::uint8_t> gt(d.count(), 0);
  std::size_t idx = 0;
  for (std::int64_t k = 0; k < d.nz; ++k) {
    for (std::int64_t j = 0; j < d.ny; ++j) {
      for (std::int64_t i = 0; i < d.nx; ++i, ++idx) {
        const double x = double(i), y = double(j), z = double(k);
        if (spec.lesion && spec.lesion->shape.contains(x, y, z)) {
          values[idx] = spec.lesion->intensity;
          gt[idx] = 1;
        } else if (brain.contains(x, y, z)) {
          values[idx] = spec.brain_intensity;
          gt[idx] = 1;
        } else if (gap_outer.contains(x, y, z)) {
          // gap between brain and skull stays at background
        } else if (skull_outer.contains(x, y, z)) {
          values[idx] = spec.skull_intensity;
        } else if (scalp_outer.contains(x, y, z)) {
          values[idx] = spec.scalp_intensity;
        }
      }
    }
  }

  if (spec.noise_sigma > 0.0) {
    Xoshiro256 rng(spec.seed);
    for (double& v : values) v = std::max(0.0, v + spec.noise_sigma * rng.normal());
  }

  const GridSpec grid = phantom_grid(d);
  return Phantom{Volume(grid, std::move(values), Datatype::Float32), Mask3D(grid, std::move(gt))};
}

Mask3D lesion_mask(const PhantomSpec& spec) {
  spec.validate();
  const Dims& d = spec.dims;
  std::vector<std::uint8_t> bits(d.count(), 0);
  if (spec.lesion) {
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < d.nz; ++k)
      for (std::int64_t j = 0; j < d.ny; ++j)
        for (std::int64_t i = 0; i < d.nx; ++i, ++idx)
          bits[idx] = spec.lesion->shape.contains(double(i), double(j), double(k)) ? 1 : 0;
  }
  return Mask3D(phantom_grid(d), std::move(bits));
}

}  // namespace brainprompt
