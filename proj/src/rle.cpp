#include "brainprompt/rle.hpp"

#include <string>

namespace brainprompt {

std::vector<std::int64_t> rle_encode(const Mask2D& mask) {
  std::vector<std::int64_t> runs;
  std::uint8_t current = 0;
  std::int64_t length = 0;
  for (std::uint8_t b : mask.bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(length);
      current = v;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

Mask2D rle_decode(std::span<const std::int64_t> runs, int width, int height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::BadRunLength, "negative mask size");
  const auto total = static_cast<std::int64_t>(width) * height;
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i] < 0 || (i > 0 && runs[i] == 0)) {
      throw Error(ErrorCode::BadRunLength, "run " + std::to_string(i) + " has illegal length " +
                                               std::to_string(runs[i]));
    }
    sum += runs[i];
    if (sum > total) break;
  }
  if (sum != total) {
    throw Error(ErrorCode::BadRunLength, "runs cover " + std::to_string(sum) + " pixels, expected " +
                                             std::to_string(total));
  }

  Mask2D out(width, height);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto n = static_cast<std::size_t>(runs[i]);
    if (i % 2 == 1) std::fill_n(out.bits.begin() + static_cast<std::ptrdiff_t>(pos), n, std::uint8_t{1});
    pos += n;
  }
  return out;
}

}  // namespace brainprompt
