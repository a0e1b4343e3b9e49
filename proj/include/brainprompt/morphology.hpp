#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "brainprompt/slicing.hpp"
#include "brainprompt/volume.hpp"

namespace brainprompt {

enum class Connectivity2D { Four = 4, Eight = 8 };

// 2D -------------------------------------------------------------------------

/// Largest connected component of the set pixels; ties go to the component
/// reached first in row-major order. Empty input gives an empty mask.
Mask2D largest_component(const Mask2D& mask, Connectivity2D conn);

/// Sets every unset pixel that a 4-connected flood fill from the image
/// border cannot reach.
Mask2D fill_holes(const Mask2D& mask);

/// Chebyshev (chessboard) distance from each set pixel to the nearest unset
/// pixel, with everything outside the image counting as unset. Unset pixels
/// get 0.
std::vector<int> chessboard_distance(const Mask2D& mask);

/// Dilation by a (2r+1)x(2r+1) square.
Mask2D dilate(const Mask2D& mask, int radius);

// 3D -------------------------------------------------------------------------

/// Erosion/dilation with the 6-connected unit cross. Voxels outside the
/// grid count as unset.
Mask3D erode6(const Mask3D& mask);
Mask3D dilate6(const Mask3D& mask);
Mask3D open6(const Mask3D& mask);

/// Largest 6-connected component; ties go to the first in storage order.
Mask3D largest_component6(const Mask3D& mask);

/// Sets every enclosed cavity (unset 6-connected region not touching the
/// grid border) with at most `max_cavity_voxels` voxels.
Mask3D fill_holes(const Mask3D& mask,
                  std::size_t max_cavity_voxels = std::numeric_limits<std::size_t>::max());

/// Number of 6-connected components of the set voxels.
std::size_t count_components6(const Mask3D& mask);

}  // namespace brainprompt
