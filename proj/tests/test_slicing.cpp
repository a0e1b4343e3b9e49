#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>

#include "brainprompt/slicing.hpp"
#include "helpers.hpp"

using namespace brainprompt;

namespace {

Volume ramp_volume(const GridSpec& g) {
  std::vector<double> v(g.dims.count());
  std::iota(v.begin(), v.end(), 0.0);
  return Volume(g, std::move(v));
}

}  // namespace

TEST_CASE("window quantiles use nearest rank") {
  const Volume v = ramp_volume(GridSpec::axis_aligned({100, 1, 1}));
  const Window w = compute_window(v);
  CHECK(w.min == 1.0);
  CHECK(w.max == 98.0);

  const Volume c(GridSpec::axis_aligned({3, 3, 3}), std::vector<double>(27, 5.0));
  CHECK(compute_window(c) == Window{5.0, 6.0});

  const Volume two(GridSpec::axis_aligned({2, 1, 1}), {0.0, 10.0});
  CHECK(compute_window(two, 0.0, 1.0) == Window{0.0, 10.0});

  CHECK_THROWS_AS(compute_window(v, 0.5, 0.5), Error);
  CHECK_THROWS_AS(compute_window(v, -0.1, 0.5), Error);
  CHECK_THROWS_AS(quantile(std::span<const double>(), 0.5), Error);
}

TEST_CASE("window pixel mapping") {
  const Window w{0.0, 200.0};
  CHECK(window_pixel(100.0, w) == 128);  // 127.5 rounds up
  CHECK(window_pixel(0.0, w) == 0);
  CHECK(window_pixel(-5.0, w) == 0);
  CHECK(window_pixel(200.0, w) == 255);
  CHECK(window_pixel(1e9, w) == 255);
}

TEST_CASE("decompose shapes per axis") {
  const GridSpec g = GridSpec::axis_aligned({4, 5, 6});
  const Volume v = ramp_volume(g);
  const Window w = compute_window(v);

  const auto axial = decompose(v, Axis::Axial, w);
  REQUIRE(axial.size() == 6);
  CHECK(axial[0].width == 4);
  CHECK(axial[0].height == 5);
  for (int k = 0; k < 6; ++k) CHECK(axial[k].index == k);

  const auto coronal = decompose(v, Axis::Coronal, w);
  REQUIRE(coronal.size() == 5);
  CHECK(coronal[0].width == 4);
  CHECK(coronal[0].height == 6);

  const auto sagittal = decompose(v, Axis::Sagittal, w);
  REQUIRE(sagittal.size() == 4);
  CHECK(sagittal[0].width == 5);
  CHECK(sagittal[0].height == 6);

  // Pixel (u, v) of a sagittal slice at x = i is voxel (i, u, v).
  const SliceImage s = extract_slice(v, Axis::Sagittal, 2, w);
  CHECK(s.at(3, 4) == window_pixel(v.at(2, 3, 4), w));
  const SliceImage c = extract_slice(v, Axis::Coronal, 1, w);
  CHECK(c.at(2, 5) == window_pixel(v.at(2, 1, 5), w));
}

TEST_CASE("reconstruct inverts slice_masks on every axis") {
  std::mt19937_64 rng(4);
  for (int n = 0; n < 10; ++n) {
    const GridSpec g = testing::random_grid(rng);
    const Mask3D m = testing::random_mask(rng, g);
    for (Axis a : {Axis::Axial, Axis::Coronal, Axis::Sagittal}) {
      const auto planes = slice_masks(m, a);
      CHECK(reconstruct(planes, a, g) == m);
      // Same planes via decompose of the mask as a 0/1 volume.
      const auto slices = decompose(m.to_volume(), a, Window{0.0, 1.0});
      std::vector<Mask2D> from_pixels;
      for (const auto& s : slices) {
        Mask2D p(s.width, s.height);
        for (std::size_t i = 0; i < s.pixels.size(); ++i) p.bits[i] = s.pixels[i] == 255 ? 1 : 0;
        from_pixels.push_back(std::move(p));
      }
      CHECK(reconstruct(from_pixels, a, g) == m);
    }
  }
}

TEST_CASE("reconstruct validates counts and shapes") {
  const GridSpec g = GridSpec::axis_aligned({4, 5, 6});
  std::vector<Mask2D> five(5, Mask2D(4, 5));
  try {
    reconstruct(five, Axis::Axial, g);
    FAIL("expected CountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CountMismatch);
  }
  std::vector<Mask2D> wrong(6, Mask2D(5, 4));
  try {
    reconstruct(wrong, Axis::Axial, g);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("single full plane lands at its index") {
  const GridSpec g = GridSpec::axis_aligned({4, 5, 6});
  std::vector<Mask2D> planes(6, Mask2D(4, 5));
  std::fill(planes[3].bits.begin(), planes[3].bits.end(), 1);
  const Mask3D m = reconstruct(planes, Axis::Axial, g);
  CHECK(m.count() == 20);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 4; ++i) CHECK(m.at(i, j, 3) == 1);
}

TEST_CASE("windowing is monotone and commutes with affine intensity maps") {
  std::mt19937_64 rng(6);
  const GridSpec g = GridSpec::axis_aligned({9, 7, 5});
  std::uniform_real_distribution<double> d(0, 300);
  std::vector<double> vals(g.dims.count());
  for (double& v : vals) v = d(rng);
  const Volume v(g, vals);
  const Window w = compute_window(v);

  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) CHECK(window_pixel(sorted[i - 1], w) <= window_pixel(sorted[i], w));

  const double a = 4.0, b = -17.0;  // exactly representable scaling
  std::vector<double> mapped(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) mapped[i] = a * vals[i] + b;
  const Volume vm(g, mapped);
  const Window wm{a * w.min + b, a * w.max + b};
  for (Axis ax : {Axis::Axial, Axis::Coronal, Axis::Sagittal}) {
    const auto s1 = decompose(v, ax, w);
    const auto s2 = decompose(vm, ax, wm);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].pixels == s2[i].pixels);
  }
}

TEST_CASE("axis names") {
  CHECK(parse_axis("axial") == Axis::Axial);
  CHECK(parse_axis("coronal") == Axis::Coronal);
  CHECK(parse_axis("sagittal") == Axis::Sagittal);
  CHECK(to_string(Axis::Coronal) == "coronal");
  try {
    parse_axis("oblique");
    FAIL("expected InvalidAxis");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidAxis);
  }
}

TEST_CASE("pgm export") {
  testing::TempDir dir;
  SliceImage s = testing::make_slice(3, 2, 7);
  s.axis = Axis::Coronal;
  s.index = 12;
  const auto path = write_pgm(s, dir.path());
  CHECK(path.filename() == "slice_coronal_0012.pgm");
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content.rfind("P5\n3 2\n255\n", 0) == 0);
  CHECK(content.size() == std::string("P5\n3 2\n255\n").size() + 6);
}

TEST_CASE("Mask2D rejects mismatched storage") {
  CHECK_THROWS_AS(Mask2D(2, 2, std::vector<std::uint8_t>(3)), Error);
}
