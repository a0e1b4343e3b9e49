#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "brainprompt/error.hpp"

namespace brainprompt {

using Vec3 = std::array<double, 3>;
using Affine = Eigen::Matrix4d;

struct Dims {
  std::int64_t nx = 0;
  std::int64_t ny = 0;
  std::int64_t nz = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  std::int64_t operator[](int axis) const noexcept { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// A sampling lattice: voxel counts, voxel size in mm, and the affine taking
/// zero-based voxel indices (i, j, k, 1) to world millimetres.
struct GridSpec {
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  Affine affine = Affine::Identity();

  /// Throws DegenerateDims, InvalidGrid or NonInvertibleAffine.
  void validate() const;

  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k));
  }

  /// Grid with diagonal affine diag(spacing) and the given world origin.
  static GridSpec axis_aligned(Dims dims, Vec3 spacing = {1.0, 1.0, 1.0},
                               Vec3 origin = {0.0, 0.0, 0.0});
};

/// On-disk element types in the supported NIfTI-1 subset. Values are the
/// NIfTI datatype codes.
enum class Datatype : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Float32 = 16,
  Float64 = 64,
};

/// Scalar intensity volume. Storage is x-fastest: index = i + nx*(j + ny*k).
class Volume {
 public:
  Volume(GridSpec grid, std::vector<double> data, Datatype storage = Datatype::Float32);

  const GridSpec& grid() const noexcept { return grid_; }
  const Dims& dims() const noexcept { return grid_.dims; }
  const Vec3& spacing() const noexcept { return grid_.spacing; }
  const Affine& affine() const noexcept { return grid_.affine; }
  Datatype storage() const noexcept { return storage_; }
  std::span<const double> data() const noexcept { return data_; }

  double at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return data_[grid_.index(i, j, k)];
  }

 private:
  GridSpec grid_;
  std::vector<double> data_;
  Datatype storage_;
};

/// Binary label grid aligned with a Volume's lattice.
class Mask3D {
 public:
  explicit Mask3D(GridSpec grid);  // all zeros
  Mask3D(GridSpec grid, std::vector<std::uint8_t> bits);

  const GridSpec& grid() const noexcept { return grid_; }
  const Dims& dims() const noexcept { return grid_.dims; }
  const Affine& affine() const noexcept { return grid_.affine; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::uint8_t at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return bits_[grid_.index(i, j, k)];
  }
  std::size_t count() const noexcept;

  /// Mask as a 0/1 volume on the same grid.
  Volume to_volume() const;
  /// Nonzero voxels become 1.
  static Mask3D from_volume(const Volume& volume);

  friend bool operator==(const Mask3D& a, const Mask3D& b);

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace brainprompt
