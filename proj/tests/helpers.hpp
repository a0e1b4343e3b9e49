#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "brainprompt/slicing.hpp"
#include "brainprompt/volume.hpp"

namespace testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(BP_TEST_DATA) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "bp") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline brainprompt::GridSpec random_grid(std::mt19937_64& rng, int max_dim = 12) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_real_distribution<double> sp(0.5, 3.0), off(-50.0, 50.0);
  brainprompt::Dims d{dim(rng), dim(rng), dim(rng)};
  return brainprompt::GridSpec::axis_aligned(d, {sp(rng), sp(rng), sp(rng)}, {off(rng), off(rng), off(rng)});
}

inline brainprompt::Mask3D random_mask(std::mt19937_64& rng, const brainprompt::GridSpec& g, double p = 0.4) {
  std::bernoulli_distribution bit(p);
  std::vector<std::uint8_t> bits(g.dims.count());
  for (auto& b : bits) b = bit(rng) ? 1 : 0;
  return brainprompt::Mask3D(g, std::move(bits));
}

inline brainprompt::Mask2D random_mask2d(std::mt19937_64& rng, int w, int h, double p = 0.5) {
  std::bernoulli_distribution bit(p);
  brainprompt::Mask2D m(w, h);
  for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
  return m;
}

inline brainprompt::SliceImage make_slice(int w, int h, std::uint8_t fill = 0) {
  brainprompt::SliceImage s;
  s.width = w;
  s.height = h;
  s.pixels.assign(static_cast<std::size_t>(w) * h, fill);
  return s;
}

inline void paint(brainprompt::SliceImage& s, int x0, int y0, int x1, int y1, std::uint8_t v) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) s.pixels[static_cast<std::size_t>(y) * s.width + x] = v;
}

}  // namespace testing
