#pragma once

#include <cstdint>
#include <optional>

#include "brainprompt/volume.hpp"

namespace brainprompt {

/// xoshiro256** seeded through splitmix64. Small, portable, and the same
/// stream in every language that implements the two published algorithms.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via the Box-Muller transform, consuming two uniforms
  /// per pair of outputs.
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
  std::optional<double> spare_;
};

/// Ellipsoid in voxel coordinates.
struct Ellipsoid {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 semi_axes{1.0, 1.0, 1.0};

  bool contains(double x, double y, double z) const noexcept;
};

struct LesionSpec {
  Ellipsoid shape;
  double intensity = 160.0;
};

/// Analytic head: a brain ellipsoid centred in the grid, an empty gap of
/// `skull_offset` voxels, a skull shell and a scalp shell, each shell the
/// difference of two scaled ellipsoids.
struct PhantomSpec {
  Dims dims{96, 96, 96};
  Vec3 brain_semi_axes{30.0, 36.0, 28.0};
  double skull_offset = 2.0;
  double skull_thickness = 3.0;
  double scalp_thickness = 2.0;
  double background_intensity = 0.0;
  double brain_intensity = 100.0;
  double skull_intensity = 200.0;
  double scalp_intensity = 60.0;
  std::optional<LesionSpec> lesion;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  Vec3 center() const noexcept;
  void validate() const;  // throws SpecOutOfBounds
};

/// Default head proportions on an arbitrary grid: the brain semi-axes
/// shrink with the smallest dimension (relative to 96) and further if the
/// fixed-width shells would otherwise leave the grid.
PhantomSpec phantom_spec_for(const Dims& dims);

/// A lesion of the given radius lying `depth` voxels beneath the brain
/// surface along +x.
LesionSpec near_surface_lesion(const PhantomSpec& spec, double radius = 5.0, double depth = 2.0);

struct Phantom {
  Volume volume;
  Mask3D ground_truth;  // brain plus lesion
};

/// Membership is evaluated at voxel centres. Lesion voxels take the lesion
/// intensity and count as brain. Noise is added afterwards and clamped at 0;
/// it never changes a ground-truth label.
Phantom make_phantom(const PhantomSpec& spec);

/// Lesion voxels only, on the phantom grid.
Mask3D lesion_mask(const PhantomSpec& spec);

/// 1 mm isotropic grid with world origin at the grid centre.
GridSpec phantom_grid(const Dims& dims);

}  // namespace brainprompt
