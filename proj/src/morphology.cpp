#include "brainprompt/morphology.hpp"

#include <algorithm>
#include <array>

namespace brainprompt {
namespace {

constexpr std::array<std::array<int, 2>, 4> kN4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
constexpr std::array<std::array<int, 2>, 8> kN8{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

// Labels connected components of `bits == value`; returns per-pixel labels
// (0 = not in set) and component sizes indexed by label - 1.
template <typename Neighbours>
std::vector<std::size_t> label2d(const Mask2D& m, const Neighbours& nbrs, std::vector<int>& labels) {
  const int w = m.width, h = m.height;
  labels.assign(m.bits.size(), 0);
  std::vector<std::size_t> sizes;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!m.bits[start] || labels[start]) continue;
    const int label = static_cast<int>(sizes.size()) + 1;
    std::size_t size = 0;
    labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++size;
      const int x = p % w, y = p / w;
      for (const auto& d : nbrs) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (m.bits[q] && !labels[q]) {
          labels[q] = label;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
  }
  return sizes;
}

struct Grid3 {
  std::int64_t nx, ny, nz;
  explicit Grid3(const Dims& d) : nx(d.nx), ny(d.ny), nz(d.nz) {}
  std::size_t size() const { return static_cast<std::size_t>(nx * ny * nz); }
};

template <typename Visit>
void for_each_neighbour6(const Grid3& g, std::size_t p, Visit&& visit) {
  const auto i = static_cast<std::int64_t>(p % g.nx);
  const auto j = static_cast<std::int64_t>((p / g.nx) % g.ny);
  const auto k = static_cast<std::int64_t>(p / (g.nx * g.ny));
  const auto sx = std::size_t{1}, sy = static_cast<std::size_t>(g.nx),
             sz = static_cast<std::size_t>(g.nx * g.ny);
  if (i > 0) visit(p - sx);
  if (i + 1 < g.nx) visit(p + sx);
  if (j > 0) visit(p - sy);
  if (j + 1 < g.ny) visit(p + sy);
  if (k > 0) visit(p - sz);
  if (k + 1 < g.nz) visit(p + sz);
}

bool on_border(const Grid3& g, std::size_t p) {
  const auto i = static_cast<std::int64_t>(p % g.nx);
  const auto j = static_cast<std::int64_t>((p / g.nx) % g.ny);
  const auto k = static_cast<std::int64_t>(p / (g.nx * g.ny));
  return i == 0 || j == 0 || k == 0 || i == g.nx - 1 || j == g.ny - 1 || k == g.nz - 1;
}

// Labels 6-connected components of voxels where bits[p] == value.
std::vector<std::size_t> label3d(const Grid3& g, std::span<const std::uint8_t> bits, std::uint8_t value,
                                 std::vector<std::int32_t>& labels) {
  labels.assign(g.size(), 0);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (bits[start] != value || labels[start]) continue;
    const auto label = static_cast<std::int32_t>(sizes.size()) + 1;
    std::size_t size = 0;
    labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      for_each_neighbour6(g, p, [&](std::size_t q) {
        if (bits[q] == value && !labels[q]) {
          labels[q] = label;
          stack.push_back(q);
        }
      });
    }
    sizes.push_back(size);
  }
  return sizes;
}

}  // namespace

Mask2D largest_component(const Mask2D& mask, Connectivity2D conn) {
  std::vector<int> labels;
  const auto sizes = conn == Connectivity2D::Eight ? label2d(mask, kN8, labels) : label2d(mask, kN4, labels);
  Mask2D out(mask.width, mask.height);
  if (sizes.empty()) return out;
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin()) + 1;
  for (std::size_t i = 0; i < labels.size(); ++i) out.bits[i] = labels[i] == best ? 1 : 0;
  return out;
}

Mask2D fill_holes(const Mask2D& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> outside(mask.bits.size(), 0);
  std::vector<int> stack;
  auto seed = [&](int x, int y) {
    const int p = y * w + x;
    if (!mask.bits[p] && !outside[p]) {
      outside[p] = 1;
      stack.push_back(p);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    const int x = p % w, y = p / w;
    for (const auto& d : kN4) {
      const int nx = x + d[0], ny = y + d[1];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      seed(nx, ny);
    }
  }
  Mask2D out(w, h);
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = outside[i] ? 0 : 1;
  return out;
}

std::vector<int> chessboard_distance(const Mask2D& mask) {
  const int w = mask.width, h = mask.height;
  constexpr int kInf = 1 << 29;
  std::vector<int> d(mask.bits.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = mask.bits[i] ? kInf : 0;
  auto get = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : d[y * w + x]; };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int& v = d[y * w + x];
      if (!v) continue;
      v = std::min({v, get(x - 1, y) + 1, get(x - 1, y - 1) + 1, get(x, y - 1) + 1, get(x + 1, y - 1) + 1});
    }
  }
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      int& v = d[y * w + x];
      if (!v) continue;
      v = std::min({v, get(x + 1, y) + 1, get(x + 1, y + 1) + 1, get(x, y + 1) + 1, get(x - 1, y + 1) + 1});
    }
  }
  return d;
}

Mask2D dilate(const Mask2D& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width, h = mask.height;
  Mask2D rows(w, h);
  for (int y = 0; y < h; ++y) {
    int last = -(1 << 29);  // x of the most recent set pixel at or left of the window end
    for (int x = 0; x < w + radius; ++x) {
      if (x < w && mask.at(x, y)) last = x;
      const int cx = x - radius;
      if (cx >= 0 && cx < w && x - last <= 2 * radius) rows.set(cx, y);
    }
  }
  Mask2D out(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -(1 << 29);
    for (int y = 0; y < h + radius; ++y) {
      if (y < h && rows.at(x, y)) last = y;
      const int cy = y - radius;
      if (cy >= 0 && cy < h && y - last <= 2 * radius) out.set(x, cy);
    }
  }
  return out;
}

Mask3D erode6(const Mask3D& mask) {
  const Grid3 g(mask.dims());
  const auto in = mask.bits();
  std::vector<std::uint8_t> out(in.size(), 0);
  for (std::size_t p = 0; p < in.size(); ++p) {
    if (!in[p] || on_border(g, p)) continue;
    bool keep = true;
    for_each_neighbour6(g, p, [&](std::size_t q) { keep = keep && in[q]; });
    out[p] = keep ? 1 : 0;
  }
  return Mask3D(mask.grid(), std::move(out));
}

Mask3D dilate6(const Mask3D& mask) {
  const Grid3 g(mask.dims());
  const auto in = mask.bits();
  std::vector<std::uint8_t> out(in.begin(), in.end());
  for (std::size_t p = 0; p < in.size(); ++p) {
    if (!in[p]) continue;
    for_each_neighbour6(g, p, [&](std::size_t q) { out[q] = 1; });
  }
  return Mask3D(mask.grid(), std::move(out));
}

Mask3D open6(const Mask3D& mask) { return dilate6(erode6(mask)); }

Mask3D largest_component6(const Mask3D& mask) {
  const Grid3 g(mask.dims());
  std::vector<std::int32_t> labels;
  const auto sizes = label3d(g, mask.bits(), 1, labels);
  std::vector<std::uint8_t> out(g.size(), 0);
  if (!sizes.empty()) {
    const auto best =
        static_cast<std::int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin()) + 1;
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = labels[p] == best ? 1 : 0;
  }
  return Mask3D(mask.grid(), std::move(out));
}

Mask3D fill_holes(const Mask3D& mask, std::size_t max_cavity_voxels) {
  const Grid3 g(mask.dims());
  std::vector<std::int32_t> labels;
  const auto sizes = label3d(g, mask.bits(), 0, labels);
  std::vector<std::uint8_t> touches(sizes.size(), 0);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (labels[p] && on_border(g, p)) touches[static_cast<std::size_t>(labels[p] - 1)] = 1;
  }
  std::vector<std::uint8_t> out(mask.bits().begin(), mask.bits().end());
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!labels[p]) continue;
    const auto l = static_cast<std::size_t>(labels[p] - 1);
    if (!touches[l] && sizes[l] <= max_cavity_voxels) out[p] = 1;
  }
  return Mask3D(mask.grid(), std::move(out));
}

std::size_t count_components6(const Mask3D& mask) {
  std::vector<std::int32_t> labels;
  return label3d(Grid3(mask.dims()), mask.bits(), 1, labels).size();
}

}  // namespace brainprompt
