#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "brainprompt/volume.hpp"

namespace brainprompt {

/// Size of the NIfTI-1 header proper; voxel data starts no earlier than 352.
inline constexpr std::size_t kNiftiHeaderSize = 348;
inline constexpr std::size_t kNiftiMinVoxOffset = 352;

/// Parses a single-file NIfTI-1 stream (".nii"), either byte order. A gzip
/// stream (".nii.gz") is detected by its magic bytes and inflated first.
/// Extension blocks are skipped. Intensities are returned after applying
/// scl_slope/scl_inter when scl_slope != 0. The affine comes from the sform
/// when sform_code > 0, else the qform when qform_code > 0, else diag(pixdim).
Volume load_nifti(std::span<const std::uint8_t> bytes);

/// Serialises as little-endian single-file NIfTI-1, vox_offset 352, sform
/// only. The element type is the volume's storage type when every value is
/// exactly representable in it, otherwise the narrowest of float32/float64
/// that is, so load_nifti(save_nifti(v)) always reproduces v's values.
std::vector<std::uint8_t> save_nifti(const Volume& volume);

/// Masks are always written as uint8 with scl_slope = 1, scl_inter = 0.
std::vector<std::uint8_t> save_nifti(const Mask3D& mask);

Volume read_nifti(const std::filesystem::path& path);
Mask3D read_nifti_mask(const std::filesystem::path& path);

/// Writes gzip-compressed output when the path ends in ".gz".
void write_nifti(const std::filesystem::path& path, const Volume& volume);
void write_nifti(const std::filesystem::path& path, const Mask3D& mask);

bool is_gzip(std::span<const std::uint8_t> bytes) noexcept;
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Affine from the NIfTI-1 quaternion representation (qform).
Affine qform_to_affine(double quatern_b, double quatern_c, double quatern_d, double qoffset_x,
                       double qoffset_y, double qoffset_z, double dx, double dy, double dz,
                       double qfac);

}  // namespace brainprompt
