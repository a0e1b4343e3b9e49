#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "brainprompt/volume.hpp"

namespace brainprompt {

/// Slicing axis. Axial planes are k = const (width nx, height ny), coronal
/// j = const (nx by nz), sagittal i = const (ny by nz).
enum class Axis { Axial, Coronal, Sagittal };

std::string_view to_string(Axis axis);
Axis parse_axis(std::string_view name);  // throws InvalidAxis

/// Source-intensity bounds mapped onto pixel values 0 and 255.
struct Window {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const Window&, const Window&) = default;
};

struct SliceImage {
  int width = 0;
  int height = 0;
  Axis axis = Axis::Axial;
  int index = 0;
  Window window;
  std::vector<std::uint8_t> pixels;  // row-major, y * width + x

  std::uint8_t at(int x, int y) const noexcept {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

struct Mask2D {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, values 0/1

  Mask2D() = default;
  Mask2D(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  Mask2D(int w, int h, std::vector<std::uint8_t> b);

  std::uint8_t at(int x, int y) const noexcept { return bits[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, std::uint8_t v = 1) noexcept { bits[static_cast<std::size_t>(y) * width + x] = v; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  friend bool operator==(const Mask2D&, const Mask2D&) = default;
};

struct PlaneShape {
  int width = 0;
  int height = 0;
  int depth = 0;  // number of planes along the axis
};

PlaneShape plane_shape(const Dims& dims, Axis axis);

/// Value at zero-based rank round_half_up(p * (n - 1)) of the sorted
/// values. Throws EmptyVolume for an empty range.
double quantile(std::span<const double> values, double p);

/// Per-volume robust window from the lo/hi quantiles. A degenerate window
/// (equal quantiles) becomes (q, q + 1).
Window compute_window(const Volume& volume, double lo_pct = 0.01, double hi_pct = 0.99);

/// clamp((v - min) / (max - min), 0, 1) * 255, rounded half-up.
std::uint8_t window_pixel(double value, const Window& window) noexcept;

SliceImage extract_slice(const Volume& volume, Axis axis, int index, const Window& window);

/// One slice per plane along `axis`, in increasing index order.
std::vector<SliceImage> decompose(const Volume& volume, Axis axis, const Window& window);

/// Inverse of the plane ordering used by decompose.
Mask3D reconstruct(std::span<const Mask2D> masks, Axis axis, const GridSpec& grid);

/// Per-plane view of a mask, the exact inverse of reconstruct.
std::vector<Mask2D> slice_masks(const Mask3D& mask, Axis axis);

/// Writes `slice_<axis>_<index04>.pgm` (binary P5, maxval 255) and returns its path.
std::filesystem::path write_pgm(const SliceImage& slice, const std::filesystem::path& dir);

}  // namespace brainprompt
