#pragma once

#include <optional>
#include <span>
#include <vector>

#include "brainprompt/slicing.hpp"

namespace brainprompt {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

/// Inclusive pixel rectangle.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(Point p) const noexcept { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Prompt for one slice: a box plus inclusion (keep) and exclusion
/// (reject) point markers.
struct PromptSet {
  Box box;
  std::vector<Point> inclusions;
  std::vector<Point> exclusions;
  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

struct PromptConfig {
  int margin = 3;        // pixels added around the foreground box
  int k_inc = 5;         // inclusion markers requested
  int k_exc = 8;         // exclusion markers requested
  int min_fg_area = 64;  // smallest foreground worth prompting
  int rim_width = 4;     // exclusion ring offset and marker spacing

  void validate() const;  // throws InvalidConfig
};

/// Throws InvalidPrompt unless the box lies in the image, every inclusion
/// is inside the box, every point is inside the image, and the inclusion
/// and exclusion sets are disjoint.
void validate_prompts(const PromptSet& prompts, int width, int height);

/// Otsu threshold over the 256-bin histogram: the lowest t maximising the
/// between-class variance of {<= t} vs {> t}. Empty when every pixel has
/// the same value.
std::optional<int> otsu_threshold(std::span<const std::uint8_t> pixels);

/// Pixels strictly above the Otsu threshold, reduced to the largest
/// 8-connected component with holes filled. Empty when nothing exceeds the
/// threshold or the component has fewer than `min_fg_area` pixels.
Mask2D estimate_foreground(const SliceImage& slice, int min_fg_area = PromptConfig{}.min_fg_area);

/// Tight bounding box of the set pixels grown by `margin`, clipped to the image.
std::optional<Box> compute_box(const Mask2D& fg, int margin);

/// Inclusions: deepest foreground pixels by chessboard distance to the
/// background. Exclusions: brightest pixels outside the foreground dilated
/// by rim_width but inside the box dilated by 2*rim_width. Both are chosen
/// greedily in (score, y, x) order with pairwise Chebyshev separation of at
/// least rim_width. Throws EmptyForeground.
PromptSet place_markers(const SliceImage& slice, const Mask2D& fg, const Box& box,
                        const PromptConfig& cfg);

/// estimate_foreground + compute_box + place_markers; empty for slices
/// without usable foreground.
std::optional<PromptSet> generate_prompt(const SliceImage& slice, const PromptConfig& cfg);

struct SlicePrompt {
  int index = 0;
  std::optional<PromptSet> prompts;
};

/// One entry per input slice, in input order.
std::vector<SlicePrompt> generate_prompts(std::span<const SliceImage> slices, const PromptConfig& cfg);

}  // namespace brainprompt
