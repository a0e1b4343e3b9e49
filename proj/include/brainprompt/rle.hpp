#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "brainprompt/slicing.hpp"

namespace brainprompt {

/// Row-major run lengths alternating zero-run first: [z0, o1, z2, ...].
/// The leading zero-run may be 0; every later run is positive.
std::vector<std::int64_t> rle_encode(const Mask2D& mask);

/// Inverse of rle_encode. Throws BadRunLength when the runs do not sum to
/// width * height, a run is negative, or a run after the first is zero.
Mask2D rle_decode(std::span<const std::int64_t> runs, int width, int height);

}  // namespace brainprompt
