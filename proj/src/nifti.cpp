#include "brainprompt/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include <zlib.h>

namespace brainprompt {
namespace {

// Field offsets in the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuaternB = 256;
constexpr std::size_t kOffQoffsetX = 268;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffMagic = 344;

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swap_;
};

// Writes little-endian regardless of host order.
class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(std::size_t offset, T value) {
    auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    std::memcpy(out_.data() + offset, raw.data(), sizeof(T));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

std::size_t element_size(Datatype dt) {
  switch (dt) {
    case Datatype::UInt8: return 1;
    case Datatype::Int16: return 2;
    case Datatype::Float32: return 4;
    case Datatype::Float64: return 8;
  }
  return 0;
}

bool is_supported(std::int16_t code) {
  return code == 2 || code == 4 || code == 16 || code == 64;
}

bool representable(double v, Datatype dt) {
  switch (dt) {
    case Datatype::UInt8: return v >= 0.0 && v <= 255.0 && std::trunc(v) == v;
    case Datatype::Int16: return v >= -32768.0 && v <= 32767.0 && std::trunc(v) == v;
    case Datatype::Float32:
      return std::isnan(v) || static_cast<double>(static_cast<float>(v)) == v;
    case Datatype::Float64: return true;
  }
  return false;
}

Datatype choose_storage(std::span<const double> values, Datatype preferred) {
  for (Datatype dt : {preferred, Datatype::Float32, Datatype::Float64}) {
    if (element_size(dt) < element_size(preferred)) continue;
    if (std::all_of(values.begin(), values.end(), [dt](double v) { return representable(v, dt); }))
      return dt;
  }
  return Datatype::Float64;
}

std::vector<std::uint8_t> encode(const GridSpec& grid, std::span<const double> values,
                                 Datatype dt) {
  const std::size_t esize = element_size(dt);
  std::vector<std::uint8_t> out(kNiftiMinVoxOffset + values.size() * esize, 0);
  Writer w(out);

  w.put<std::int32_t>(kOffSizeofHdr, 348);
  w.put<std::int16_t>(kOffDim + 0, 3);
  w.put<std::int16_t>(kOffDim + 2, static_cast<std::int16_t>(grid.dims.nx));
  w.put<std::int16_t>(kOffDim + 4, static_cast<std::int16_t>(grid.dims.ny));
  w.put<std::int16_t>(kOffDim + 6, static_cast<std::int16_t>(grid.dims.nz));
  for (int d = 4; d < 8; ++d) w.put<std::int16_t>(kOffDim + 2 * d, 1);
  w.put<std::int16_t>(kOffDatatype, static_cast<std::int16_t>(dt));
  w.put<std::int16_t>(kOffBitpix, static_cast<std::int16_t>(8 * esize));
  w.put<float>(kOffPixdim + 0, 1.0f);
  for (int a = 0; a < 3; ++a) {
    w.put<float>(kOffPixdim + 4 * (a + 1), static_cast<float>(grid.spacing[a]));
  }
  w.put<float>(kOffVoxOffset, static_cast<float>(kNiftiMinVoxOffset));
  w.put<float>(kOffSclSlope, 1.0f);
  w.put<float>(kOffSclInter, 0.0f);
  w.put<std::int16_t>(kOffSformCode, 1);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      w.put<float>(kOffSrowX + 16 * r + 4 * c, static_cast<float>(grid.affine(r, c)));
    }
  }
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  std::size_t off = kNiftiMinVoxOffset;
  for (double v : values) {
    switch (dt) {
      case Datatype::UInt8: out[off] = static_cast<std::uint8_t>(v); break;
      case Datatype::Int16: w.put<std::int16_t>(off, static_cast<std::int16_t>(v)); break;
      case Datatype::Float32: w.put<float>(off, static_cast<float>(v)); break;
      case Datatype::Float64: w.put<double>(off, v); break;
    }
    off += esize;
  }
  return out;
}

}  // namespace

Affine qform_to_affine(double b, double c, double d, double qx, double qy, double qz, double dx,
                       double dy, double dz, double qfac) {
  // Quaternion to rotation, following the reference nifti1_io routine.
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  dx = dx > 0.0 ? dx : 1.0;
  dy = dy > 0.0 ? dy : 1.0;
  dz = dz > 0.0 ? dz : 1.0;
  if (qfac < 0.0) dz = -dz;

  Affine m = Affine::Identity();
  m(0, 0) = (a * a + b * b - c * c - d * d) * dx;
  m(0, 1) = 2.0 * (b * c - a * d) * dy;
  m(0, 2) = 2.0 * (b * d + a * c) * dz;
  m(1, 0) = 2.0 * (b * c + a * d) * dx;
  m(1, 1) = (a * a + c * c - b * b - d * d) * dy;
  m(1, 2) = 2.0 * (c * d - a * b) * dz;
  m(2, 0) = 2.0 * (b * d - a * c) * dx;
  m(2, 1) = 2.0 * (c * d + a * b) * dy;
  m(2, 2) = (a * a + d * d - c * c - b * b) * dz;
  m(0, 3) = qx;
  m(1, 3) = qy;
  m(2, 3) = qz;
  return m;
}

bool is_gzip(std::span<const std::uint8_t> bytes) noexcept {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error(ErrorCode::Io, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      // A gzip stream cut short is the same failure as a short payload.
      throw Error(rc == Z_BUF_ERROR ? ErrorCode::Truncated : ErrorCode::Io,
                  "gzip stream is corrupt or incomplete");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::Io, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::Io, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

Volume load_nifti(std::span<const std::uint8_t> input) {
  std::vector<std::uint8_t> inflated;
  if (is_gzip(input)) {
    inflated = gzip_decompress(input);
    input = inflated;
  }
  if (input.size() < 4) throw Error(ErrorCode::BadMagic, "stream too short for a NIfTI-1 header");

  bool swap = false;
  if (Reader(input, false).get<std::int32_t>(kOffSizeofHdr) != 348) {
    if (Reader(input, true).get<std::int32_t>(kOffSizeofHdr) != 348) {
      throw Error(ErrorCode::BadMagic, "sizeof_hdr is not 348 in either byte order");
    }
    swap = true;
  }
  if (input.size() < kNiftiHeaderSize) throw Error(ErrorCode::Truncated, "header is incomplete");
  if (std::memcmp(input.data() + kOffMagic, "n+1\0", 4) != 0) {
    throw Error(ErrorCode::BadMagic, "magic is not \"n+1\" (only single-file NIfTI-1 is supported)");
  }
  const Reader r(input, swap);

  const std::int16_t ndim = r.get<std::int16_t>(kOffDim);
  if (ndim < 1 || ndim > 7) {
    throw Error(ErrorCode::DegenerateDims, "dim[0] = " + std::to_string(ndim) + " out of range");
  }
  std::array<std::int64_t, 3> n{1, 1, 1};
  for (int d = 1; d <= ndim; ++d) {
    const std::int16_t v = r.get<std::int16_t>(kOffDim + 2 * d);
    if (v <= 0) {
      throw Error(ErrorCode::DegenerateDims, "dim[" + std::to_string(d) + "] = " + std::to_string(v));
    }
    if (d <= 3) {
      n[d - 1] = v;
    } else if (v != 1) {
      throw Error(ErrorCode::InvalidGrid, "only single 3D volumes are supported (dim[" +
                                              std::to_string(d) + "] = " + std::to_string(v) + ")");
    }
  }

  const std::int16_t code = r.get<std::int16_t>(kOffDatatype);
  if (!is_supported(code)) {
    throw Error(ErrorCode::UnsupportedDatatype, "datatype code " + std::to_string(code));
  }
  const auto dt = static_cast<Datatype>(code);

  const float vox_offset_f = r.get<float>(kOffVoxOffset);
  if (!std::isfinite(vox_offset_f) || vox_offset_f < static_cast<float>(kNiftiMinVoxOffset)) {
    throw Error(ErrorCode::BadMagic, "vox_offset must be at least 352");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);

  GridSpec grid;
  grid.dims = Dims{n[0], n[1], n[2]};
  std::array<double, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = r.get<float>(kOffPixdim + 4 * i);
  for (int a = 0; a < 3; ++a) {
    const double p = std::abs(pixdim[a + 1]);
    grid.spacing[a] = (std::isfinite(p) && p > 0.0) ? p : 1.0;
  }

  const std::size_t count = grid.dims.count();
  const std::size_t esize = element_size(dt);
  if (input.size() < vox_offset || (input.size() - vox_offset) / esize < count) {
    throw Error(ErrorCode::Truncated, "payload holds fewer than " + std::to_string(count) +
                                          " voxels of " + std::to_string(esize) + " bytes");
  }

  if (r.get<std::int16_t>(kOffSformCode) > 0) {
    grid.affine = Affine::Identity();
    for (int row = 0; row < 3; ++row)
      for (int c = 0; c < 4; ++c) grid.affine(row, c) = r.get<float>(kOffSrowX + 16 * row + 4 * c);
  } else if (r.get<std::int16_t>(kOffQformCode) > 0) {
    grid.affine = qform_to_affine(
        r.get<float>(kOffQuaternB), r.get<float>(kOffQuaternB + 4), r.get<float>(kOffQuaternB + 8),
        r.get<float>(kOffQoffsetX), r.get<float>(kOffQoffsetX + 4), r.get<float>(kOffQoffsetX + 8),
        grid.spacing[0], grid.spacing[1], grid.spacing[2], pixdim[0] < 0.0 ? -1.0 : 1.0);
  } else {
    grid.affine = Affine::Identity();
    for (int a = 0; a < 3; ++a) grid.affine(a, a) = grid.spacing[a];
  }

  const double slope = r.get<float>(kOffSclSlope);
  const double inter = r.get<float>(kOffSclInter);
  const bool scaled = std::isfinite(slope) && slope != 0.0 && !(slope == 1.0 && inter == 0.0);

  std::vector<double> values(count);
  const Reader payload(input.subspan(vox_offset), swap);
  for (std::size_t i = 0; i < count; ++i) {
    double x = 0.0;
    switch (dt) {
      case Datatype::UInt8: x = input[vox_offset + i]; break;
      case Datatype::Int16: x = payload.get<std::int16_t>(2 * i); break;
      case Datatype::Float32: x = payload.get<float>(4 * i); break;
      case Datatype::Float64: x = payload.get<double>(8 * i); break;
    }
    values[i] = scaled ? slope * x + inter : x;
  }
  return Volume(std::move(grid), std::move(values), scaled ? Datatype::Float32 : dt);
}

std::vector<std::uint8_t> save_nifti(const Volume& volume) {
  const Datatype dt = choose_storage(volume.data(), volume.storage());
  return encode(volume.grid(), volume.data(), dt);
}

std::vector<std::uint8_t> save_nifti(const Mask3D& mask) {
  const std::vector<double> values(mask.bits().begin(), mask.bits().end());
  return encode(mask.grid(), values, Datatype::UInt8);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Volume read_nifti(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "no such file: " + path.string());
  return load_nifti(read_file(path));
}

Mask3D read_nifti_mask(const std::filesystem::path& path) {
  return Mask3D::from_volume(read_nifti(path));
}

namespace {
bool wants_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }
}  // namespace

void write_nifti(const std::filesystem::path& path, const Volume& volume) {
  const auto bytes = save_nifti(volume);
  write_file(path, wants_gzip(path) ? gzip_compress(bytes) : bytes);
}

void write_nifti(const std::filesystem::path& path, const Mask3D& mask) {
  const auto bytes = save_nifti(mask);
  write_file(path, wants_gzip(path) ? gzip_compress(bytes) : bytes);
}

}  // namespace brainprompt
