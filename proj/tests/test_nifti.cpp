#include <doctest.h>

#include <cstring>
#include <random>

#include <json.hpp>

#include "brainprompt/nifti.hpp"
#include "helpers.hpp"

using namespace brainprompt;

namespace {

nlohmann::json expected_fixtures() {
  const auto bytes = read_file(testing::data_path("expected.json"));
  return nlohmann::json::parse(bytes.begin(), bytes.end());
}

void check_against_reference(const Volume& v, const nlohmann::json& e, bool check_affine = true) {
  REQUIRE(v.dims().nx == e["dims"][0].get<int>());
  REQUIRE(v.dims().ny == e["dims"][1].get<int>());
  REQUIRE(v.dims().nz == e["dims"][2].get<int>());
  for (int a = 0; a < 3; ++a) CHECK(v.spacing()[a] == doctest::Approx(e["spacing"][a].get<double>()).epsilon(1e-6));
  if (check_affine) {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) CHECK(v.affine()(r, c) == doctest::Approx(e["affine"][r][c].get<double>()).epsilon(1e-6));
  }
  const auto values = e["values"].get<std::vector<double>>();
  REQUIRE(values.size() == v.data().size());
  for (std::size_t i = 0; i < values.size(); ++i) CHECK(v.data()[i] == values[i]);
}

template <class T>
void poke(std::vector<std::uint8_t>& bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

// The affine is stored as float32 rows, so compare it relative to magnitude.
bool affine_close(const Affine& a, const Affine& b) {
  return ((a - b).cwiseAbs().array() <= 1e-6 * b.cwiseAbs().array().max(1.0)).all();
}

Volume random_volume(std::mt19937_64& rng, Datatype dt) {
  const GridSpec g = testing::random_grid(rng, 9);
  std::vector<double> values(g.dims.count());
  std::uniform_int_distribution<int> u8(0, 255), i16(-32768, 32767);
  std::normal_distribution<double> n(0.0, 100.0);
  for (double& v : values) {
    switch (dt) {
      case Datatype::UInt8: v = u8(rng); break;
      case Datatype::Int16: v = i16(rng); break;
      case Datatype::Float32: v = static_cast<float>(n(rng)); break;
      case Datatype::Float64: v = n(rng); break;
    }
  }
  return Volume(g, std::move(values), dt);
}

}  // namespace

TEST_CASE("fixtures decode like the reference reader") {
  const auto expected = expected_fixtures();
  for (const char* name : {"f32_2x2x2.nii", "f32_2x2x2.nii.gz", "be_i16.nii", "f64_2x3x2.nii", "qform_only.nii"}) {
    CAPTURE(name);
    check_against_reference(read_nifti(testing::data_path(name)), expected[name]);
  }
}

TEST_CASE("float fixture holds 7 at (1,1,1)") {
  const Volume v = read_nifti(testing::data_path("f32_2x2x2.nii"));
  CHECK(v.at(1, 1, 1) == 7.0);
  CHECK(v.at(1, 0, 0) == 1.0);
  CHECK(v.at(0, 1, 0) == 2.0);
  CHECK(v.storage() == Datatype::Float32);
}

TEST_CASE("scl_slope and scl_inter are applied") {
  const Volume v = read_nifti(testing::data_path("scaled_u8.nii"));
  check_against_reference(v, expected_fixtures()["scaled_u8.nii"], false);
  CHECK(v.at(0, 0, 0) == 7.0);
  // No sform or qform: the affine is diag(pixdim).
  CHECK(v.affine().isApprox(Affine::Identity()));
}

TEST_CASE("big-endian input is detected") {
  const Volume v = read_nifti(testing::data_path("be_i16.nii"));
  CHECK(v.storage() == Datatype::Int16);
  CHECK(v.spacing()[2] == 3.0);
}

TEST_CASE("malformed headers are rejected") {
  const auto good = read_file(testing::data_path("f32_2x2x2.nii"));

  SUBCASE("sizeof_hdr not 348 in either byte order") {
    auto b = good;
    poke<std::int32_t>(b, 0, 1234);
    CHECK_THROWS_WITH_AS(load_nifti(b), doctest::Contains("BadMagic"), Error);
  }
  SUBCASE("two-file magic") {
    auto b = good;
    std::memcpy(b.data() + 344, "ni1\0", 4);
    CHECK_THROWS_AS(load_nifti(b), Error);
    try {
      load_nifti(b);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadMagic);
    }
  }
  SUBCASE("unsupported datatype") {
    auto b = good;
    poke<std::int16_t>(b, 70, 512);  // uint16
    try {
      load_nifti(b);
      FAIL("expected UnsupportedDatatype");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedDatatype);
    }
  }
  SUBCASE("short payload") {
    auto b = good;
    b.resize(b.size() - 1);
    try {
      load_nifti(b);
      FAIL("expected Truncated");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Truncated);
    }
  }
  SUBCASE("short header") {
    std::vector<std::uint8_t> b(good.begin(), good.begin() + 100);
    CHECK_THROWS_AS(load_nifti(b), Error);
  }
  SUBCASE("zero dim") {
    auto b = good;
    poke<std::int16_t>(b, 42, 0);
    try {
      load_nifti(b);
      FAIL("expected DegenerateDims");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateDims);
    }
  }
}

TEST_CASE("save then load reproduces the fixture") {
  const Volume v = read_nifti(testing::data_path("f32_2x2x2.nii"));
  const Volume w = load_nifti(save_nifti(v));
  CHECK(w.dims() == v.dims());
  CHECK(w.spacing() == v.spacing());
  CHECK(w.affine().isApprox(v.affine(), 1e-12));
  CHECK(std::equal(w.data().begin(), w.data().end(), v.data().begin(), v.data().end()));

  const Volume q = read_nifti(testing::data_path("qform_only.nii"));
  const Volume q2 = load_nifti(save_nifti(q));
  CHECK((q2.affine() - q.affine()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("all-zero mask payload") {
  const Mask3D m(GridSpec::axis_aligned({3, 3, 3}));
  const auto bytes = save_nifti(m);
  REQUIRE(bytes.size() == kNiftiMinVoxOffset + 27);
  std::int16_t datatype = 0;
  float slope = 0, inter = -1;
  std::memcpy(&datatype, bytes.data() + 70, 2);
  std::memcpy(&slope, bytes.data() + 112, 4);
  std::memcpy(&inter, bytes.data() + 116, 4);
  CHECK(datatype == 2);
  CHECK(slope == 1.0f);
  CHECK(inter == 0.0f);
  CHECK(std::all_of(bytes.begin() + kNiftiMinVoxOffset, bytes.end(), [](std::uint8_t b) { return b == 0; }));
  CHECK(std::memcmp(bytes.data() + 344, "n+1\0", 4) == 0);
}

TEST_CASE("randomised round trips keep values exact") {
  std::mt19937_64 rng(11);
  for (Datatype dt : {Datatype::UInt8, Datatype::Int16, Datatype::Float32, Datatype::Float64}) {
    for (int n = 0; n < 10; ++n) {
      const Volume v = random_volume(rng, dt);
      const Volume w = load_nifti(save_nifti(v));
      CHECK(w.storage() == dt);
      CHECK(w.dims() == v.dims());
      CHECK(affine_close(w.affine(), v.affine()));
      CHECK(std::equal(w.data().begin(), w.data().end(), v.data().begin(), v.data().end()));
    }
  }
}

TEST_CASE("values outside the storage type promote to a float type") {
  const GridSpec g = GridSpec::axis_aligned({2, 1, 1});
  const Volume half(g, {0.5, 1.0}, Datatype::Int16);
  const Volume w = load_nifti(save_nifti(half));
  CHECK(w.storage() == Datatype::Float32);
  CHECK(w.data()[0] == 0.5);

  const Volume fine(g, {0.1, 1.0}, Datatype::Float32);
  const Volume w2 = load_nifti(save_nifti(fine));
  CHECK(w2.storage() == Datatype::Float64);
  CHECK(w2.data()[0] == 0.1);
}

TEST_CASE("gzip files round trip through the file helpers") {
  testing::TempDir dir;
  std::mt19937_64 rng(5);
  const Volume v = random_volume(rng, Datatype::Float32);
  write_nifti(dir / "v.nii.gz", v);
  const auto raw = read_file(dir / "v.nii.gz");
  CHECK(is_gzip(raw));
  const Volume w = read_nifti(dir / "v.nii.gz");
  CHECK(std::equal(w.data().begin(), w.data().end(), v.data().begin(), v.data().end()));

  write_nifti(dir / "v.nii", v);
  CHECK_FALSE(is_gzip(read_file(dir / "v.nii")));

  auto truncated = raw;
  truncated.resize(raw.size() / 2);
  CHECK_THROWS_AS(load_nifti(truncated), Error);
}

TEST_CASE("masks load back as 0/1") {
  std::mt19937_64 rng(3);
  const GridSpec g = testing::random_grid(rng);
  const Mask3D m = testing::random_mask(rng, g);
  testing::TempDir dir;
  write_nifti(dir / "m.nii.gz", m);
  const Mask3D back = read_nifti_mask(dir / "m.nii.gz");
  CHECK(back.dims() == m.dims());
  CHECK(affine_close(back.grid().affine, m.grid().affine));
  CHECK(std::equal(back.bits().begin(), back.bits().end(), m.bits().begin(), m.bits().end()));
}

TEST_CASE("missing file names the path") {
  CHECK_THROWS_WITH_AS(read_nifti("/no/such/file.nii"), doctest::Contains("/no/such/file.nii"), Error);
}

TEST_CASE("qform quaternion decoding") {
  // Identity quaternion with qfac -1 flips z.
  const Affine a = qform_to_affine(0, 0, 0, 1, 2, 3, 2, 3, 4, -1);
  Affine want = Affine::Identity();
  want.diagonal() << 2, 3, -4, 1;
  want.block<3, 1>(0, 3) << 1, 2, 3;
  CHECK(a.isApprox(want));

  // 180 degrees about x: b = 1.
  const Affine r = qform_to_affine(1, 0, 0, 0, 0, 0, 1, 1, 1, 1);
  CHECK(r(1, 1) == doctest::Approx(-1));
  CHECK(r(2, 2) == doctest::Approx(-1));
}

TEST_CASE("grid validation") {
  GridSpec g = GridSpec::axis_aligned({2, 2, 2});
  g.affine(2, 2) = 0;
  CHECK_THROWS_AS(g.validate(), Error);
  CHECK_THROWS_AS(GridSpec::axis_aligned({0, 2, 2}).validate(), Error);
  CHECK_THROWS_AS(GridSpec::axis_aligned({2, 2, 2}, {1.0, -1.0, 1.0}).validate(), Error);
}
