#include "brainprompt/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace brainprompt {

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::Axial: return "axial";
    case Axis::Coronal: return "coronal";
    case Axis::Sagittal: return "sagittal";
  }
  throw Error(ErrorCode::InvalidAxis, "axis value " + std::to_string(static_cast<int>(axis)));
}

Axis parse_axis(std::string_view name) {
  if (name == "axial") return Axis::Axial;
  if (name == "coronal") return Axis::Coronal;
  if (name == "sagittal") return Axis::Sagittal;
  throw Error(ErrorCode::InvalidAxis, "unknown axis '" + std::string(name) + "'");
}

Mask2D::Mask2D(int w, int h, std::vector<std::uint8_t> b) : width(w), height(h), bits(std::move(b)) {
  if (w < 0 || h < 0 || bits.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::ShapeMismatch, "mask bits do not match " + std::to_string(w) + "x" +
                                              std::to_string(h));
  }
}

std::size_t Mask2D::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

PlaneShape plane_shape(const Dims& d, Axis axis) {
  switch (axis) {
    case Axis::Axial: return {int(d.nx), int(d.ny), int(d.nz)};
    case Axis::Coronal: return {int(d.nx), int(d.nz), int(d.ny)};
    case Axis::Sagittal: return {int(d.ny), int(d.nz), int(d.nx)};
  }
  throw Error(ErrorCode::InvalidAxis, "axis value " + std::to_string(static_cast<int>(axis)));
}

namespace {

// Volume linear index of in-plane pixel (u, v) on plane `index`.
struct PlaneIndexer {
  const GridSpec& grid;
  Axis axis;

  std::size_t operator()(int u, int v, int index) const noexcept {
    switch (axis) {
      case Axis::Axial: return grid.index(u, v, index);
      case Axis::Coronal: return grid.index(u, index, v);
      case Axis::Sagittal: return grid.index(index, u, v);
    }
    return 0;
  }
};

std::size_t rank_for(double p, std::size_t n) {
  const double r = std::floor(p * static_cast<double>(n - 1) + 0.5);
  return std::min(static_cast<std::size_t>(std::max(r, 0.0)), n - 1);
}

}  // namespace

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptyVolume, "no values to take a quantile of");
  std::vector<double> copy(values.begin(), values.end());
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(rank_for(p, copy.size()));
  std::nth_element(copy.begin(), nth, copy.end());
  return *nth;
}

Window compute_window(const Volume& volume, double lo_pct, double hi_pct) {
  if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "window percentiles must satisfy 0 <= lo < hi <= 1");
  }
  const auto values = volume.data();
  if (values.empty()) throw Error(ErrorCode::EmptyVolume, "volume has no voxels");

  std::vector<double> copy(values.begin(), values.end());
  const auto lo_it = copy.begin() + static_cast<std::ptrdiff_t>(rank_for(lo_pct, copy.size()));
  const auto hi_it = copy.begin() + static_cast<std::ptrdiff_t>(rank_for(hi_pct, copy.size()));
  std::nth_element(copy.begin(), hi_it, copy.end());
  const double hi = *hi_it;
  // Everything left of hi_it is <= hi, so the lower rank lives there.
  std::nth_element(copy.begin(), lo_it, hi_it + 1);
  const double lo = *lo_it;
  if (lo >= hi) return {lo, lo + 1.0};
  return {lo, hi};
}

std::uint8_t window_pixel(double value, const Window& w) noexcept {
  double t = (value - w.min) / (w.max - w.min);
  t = std::clamp(t, 0.0, 1.0);
  // The tiny bias keeps exact half-way values rounding up even when an
  // equivalent affine-rescaled computation lands one ulp below.
  return static_cast<std::uint8_t>(std::floor(t * 255.0 + 0.5 + 1e-9));
}

SliceImage extract_slice(const Volume& volume, Axis axis, int index, const Window& window) {
  const PlaneShape shape = plane_shape(volume.dims(), axis);
  if (index < 0 || index >= shape.depth) {
    throw Error(ErrorCode::ShapeMismatch, "slice index " + std::to_string(index) + " out of range");
  }
  if (!(window.min < window.max)) throw Error(ErrorCode::InvalidConfig, "window requires min < max");

  SliceImage s;
  s.width = shape.width;
  s.height = shape.height;
  s.axis = axis;
  s.index = index;
  s.window = window;
  s.pixels.resize(static_cast<std::size_t>(shape.width) * shape.height);
  const PlaneIndexer at{volume.grid(), axis};
  const auto data = volume.data();
  for (int v = 0; v < shape.height; ++v) {
    for (int u = 0; u < shape.width; ++u) {
      s.pixels[static_cast<std::size_t>(v) * shape.width + u] = window_pixel(data[at(u, v, index)], window);
    }
  }
  return s;
}

std::vector<SliceImage> decompose(const Volume& volume, Axis axis, const Window& window) {
  const PlaneShape shape = plane_shape(volume.dims(), axis);
  std::vector<SliceImage> slices;
  slices.reserve(static_cast<std::size_t>(shape.depth));
  for (int k = 0; k < shape.depth; ++k) slices.push_back(extract_slice(volume, axis, k, window));
  return slices;
}

Mask3D reconstruct(std::span<const Mask2D> masks, Axis axis, const GridSpec& grid) {
  const PlaneShape shape = plane_shape(grid.dims, axis);
  if (masks.size() != static_cast<std::size_t>(shape.depth)) {
    throw Error(ErrorCode::CountMismatch, "expected " + std::to_string(shape.depth) +
                                              " slice masks along " + std::string(to_string(axis)) +
                                              ", got " + std::to_string(masks.size()));
  }
  std::vector<std::uint8_t> bits(grid.dims.count(), 0);
  const PlaneIndexer at{grid, axis};
  for (int k = 0; k < shape.depth; ++k) {
    const Mask2D& m = masks[static_cast<std::size_t>(k)];
    if (m.width != shape.width || m.height != shape.height ||
        m.bits.size() != static_cast<std::size_t>(shape.width) * shape.height) {
      throw Error(ErrorCode::ShapeMismatch,
                  "slice " + std::to_string(k) + " is " + std::to_string(m.width) + "x" +
                      std::to_string(m.height) + ", grid plane is " + std::to_string(shape.width) +
                      "x" + std::to_string(shape.height));
    }
    for (int v = 0; v < shape.height; ++v)
      for (int u = 0; u < shape.width; ++u) bits[at(u, v, k)] = m.at(u, v) ? 1 : 0;
  }
  return Mask3D(grid, std::move(bits));
}

std::vector<Mask2D> slice_masks(const Mask3D& mask, Axis axis) {
  const PlaneShape shape = plane_shape(mask.dims(), axis);
  const PlaneIndexer at{mask.grid(), axis};
  const auto bits = mask.bits();
  std::vector<Mask2D> out;
  out.reserve(static_cast<std::size_t>(shape.depth));
  for (int k = 0; k < shape.depth; ++k) {
    Mask2D m(shape.width, shape.height);
    for (int v = 0; v < shape.height; ++v)
      for (int u = 0; u < shape.width; ++u) m.set(u, v, bits[at(u, v, k)]);
    out.push_back(std::move(m));
  }
  return out;
}

std::filesystem::path write_pgm(const SliceImage& slice, const std::filesystem::path& dir) {
  char name[64];
  std::snprintf(name, sizeof(name), "slice_%s_%04d.pgm", std::string(to_string(slice.axis)).c_str(),
                slice.index);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out << "P5\n" << slice.width << ' ' << slice.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(slice.pixels.data()),
            static_cast<std::streamsize>(slice.pixels.size()));
  return path;
}

}  // namespace brainprompt
