#pragma once

#include "brainprompt/volume.hpp"

namespace brainprompt {

enum class Interpolation { Trilinear, Nearest };

/// Samples `source` at every voxel centre of `target`. Target indices go
/// through target.affine, then the inverse of the source affine, to
/// fractional source indices. Trilinear blends the 8 surrounding voxels;
/// nearest rounds each coordinate half-up. Points outside the source
/// lattice read as 0.
Volume resample(const Volume& source, const GridSpec& target, Interpolation interp);

/// Nearest-neighbour resampling of a label mask; the result stays binary.
Mask3D resample(const Mask3D& source, const GridSpec& target);

/// Maps target voxel indices to source voxel indices.
Affine index_mapping(const GridSpec& source, const GridSpec& target);

}  // namespace brainprompt
