#include "brainprompt/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace brainprompt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::DegenerateDims: return "DegenerateDims";
    case ErrorCode::NonInvertibleAffine: return "NonInvertibleAffine";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::EmptyVolume: return "EmptyVolume";
    case ErrorCode::InvalidAxis: return "InvalidAxis";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyForeground: return "EmptyForeground";
    case ErrorCode::EmptyPromptSet: return "EmptyPromptSet";
    case ErrorCode::InvalidPrompt: return "InvalidPrompt";
    case ErrorCode::BadRunLength: return "BadRunLength";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ExecutableNotFound: return "ExecutableNotFound";
    case ErrorCode::ToolFailed: return "ToolFailed";
    case ErrorCode::OutputMissing: return "OutputMissing";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::SpecOutOfBounds: return "SpecOutOfBounds";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

void GridSpec::validate() const {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw Error(ErrorCode::DegenerateDims,
                "dims must be positive, got (" + std::to_string(dims.nx) + ", " +
                    std::to_string(dims.ny) + ", " + std::to_string(dims.nz) + ")");
  }
  for (double s : spacing) {
    if (!std::isfinite(s) || s <= 0.0) {
      throw Error(ErrorCode::InvalidGrid, "voxel spacing must be positive and finite");
    }
  }
  if (!affine.allFinite()) throw Error(ErrorCode::NonInvertibleAffine, "affine has non-finite entries");
  if (affine(3, 0) != 0.0 || affine(3, 1) != 0.0 || affine(3, 2) != 0.0 || affine(3, 3) != 1.0) {
    throw Error(ErrorCode::InvalidGrid, "affine last row must be (0, 0, 0, 1)");
  }
  const double det = affine.topLeftCorner<3, 3>().determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) {
    throw Error(ErrorCode::NonInvertibleAffine, "affine is singular");
  }
}

GridSpec GridSpec::axis_aligned(Dims dims, Vec3 spacing, Vec3 origin) {
  GridSpec g;
  g.dims = dims;
  g.spacing = spacing;
  g.affine = Affine::Identity();
  for (int a = 0; a < 3; ++a) {
    g.affine(a, a) = spacing[a];
    g.affine(a, 3) = origin[a];
  }
  return g;
}

Volume::Volume(GridSpec grid, std::vector<double> data, Datatype storage)
    : grid_(std::move(grid)), data_(std::move(data)), storage_(storage) {
  grid_.validate();
  if (data_.size() != grid_.dims.count()) {
    throw Error(ErrorCode::ShapeMismatch, "volume holds " + std::to_string(data_.size()) +
                                              " values but dims require " +
                                              std::to_string(grid_.dims.count()));
  }
}

Mask3D::Mask3D(GridSpec grid) : grid_(std::move(grid)) {
  grid_.validate();
  bits_.assign(grid_.dims.count(), 0);
}

Mask3D::Mask3D(GridSpec grid, std::vector<std::uint8_t> bits)
    : grid_(std::move(grid)), bits_(std::move(bits)) {
  grid_.validate();
  if (bits_.size() != grid_.dims.count()) {
    throw Error(ErrorCode::ShapeMismatch, "mask holds " + std::to_string(bits_.size()) +
                                              " labels but dims require " +
                                              std::to_string(grid_.dims.count()));
  }
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; })) {
    throw Error(ErrorCode::InvalidGrid, "mask labels must be 0 or 1");
  }
}

std::size_t Mask3D::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Volume Mask3D::to_volume() const {
  return Volume(grid_, std::vector<double>(bits_.begin(), bits_.end()), Datatype::UInt8);
}

Mask3D Mask3D::from_volume(const Volume& volume) {
  std::vector<std::uint8_t> bits(volume.data().size());
  std::transform(volume.data().begin(), volume.data().end(), bits.begin(),
                 [](double v) { return static_cast<std::uint8_t>(v != 0.0); });
  return Mask3D(volume.grid(), std::move(bits));
}

bool operator==(const Mask3D& a, const Mask3D& b) {
  return a.grid_.dims == b.grid_.dims && a.grid_.affine == b.grid_.affine && a.bits_ == b.bits_;
}

}  // namespace brainprompt
