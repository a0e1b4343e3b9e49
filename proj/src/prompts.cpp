#include "brainprompt/prompts.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string>

#include "brainprompt/morphology.hpp"

namespace brainprompt {

void PromptConfig::validate() const {
  if (k_inc < 1) throw Error(ErrorCode::InvalidConfig, "k_inc must be >= 1");
  if (k_exc < 0) throw Error(ErrorCode::InvalidConfig, "k_exc must be >= 0");
  if (margin < 0) throw Error(ErrorCode::InvalidConfig, "margin must be >= 0");
  if (min_fg_area < 1) throw Error(ErrorCode::InvalidConfig, "min_fg_area must be >= 1");
  if (rim_width < 1) throw Error(ErrorCode::InvalidConfig, "rim_width must be >= 1");
}

void validate_prompts(const PromptSet& p, int width, int height) {
  const Box& b = p.box;
  if (!(0 <= b.x0 && b.x0 <= b.x1 && b.x1 < width && 0 <= b.y0 && b.y0 <= b.y1 && b.y1 < height)) {
    throw Error(ErrorCode::InvalidPrompt, "box (" + std::to_string(b.x0) + ", " + std::to_string(b.y0) +
                                              ", " + std::to_string(b.x1) + ", " + std::to_string(b.y1) +
                                              ") does not fit a " + std::to_string(width) + "x" +
                                              std::to_string(height) + " image");
  }
  for (const Point& q : p.inclusions) {
    if (!b.contains(q)) throw Error(ErrorCode::InvalidPrompt, "inclusion point outside the box");
  }
  for (const Point& q : p.exclusions) {
    if (q.x < 0 || q.y < 0 || q.x >= width || q.y >= height) {
      throw Error(ErrorCode::InvalidPrompt, "exclusion point outside the image");
    }
    if (std::find(p.inclusions.begin(), p.inclusions.end(), q) != p.inclusions.end()) {
      throw Error(ErrorCode::InvalidPrompt, "point is both an inclusion and an exclusion");
    }
  }
}

std::optional<int> otsu_threshold(std::span<const std::uint8_t> pixels) {
  std::array<double, 256> hist{};
  for (std::uint8_t p : pixels) hist[p] += 1.0;
  double total = 0.0, total_sum = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    total_sum += i * hist[i];
  }

  std::optional<int> best;
  double best_var = -1.0;
  double w0 = 0.0, s0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    s0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = s0 / w0 - (total_sum - s0) / w1;
    const double var = w0 * w1 * diff * diff;
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

Mask2D estimate_foreground(const SliceImage& slice, int min_fg_area) {
  Mask2D empty(slice.width, slice.height);
  const auto t = otsu_threshold(slice.pixels);
  if (!t) return empty;

  Mask2D candidates(slice.width, slice.height);
  for (std::size_t i = 0; i < slice.pixels.size(); ++i) candidates.bits[i] = slice.pixels[i] > *t ? 1 : 0;
  Mask2D component = largest_component(candidates, Connectivity2D::Eight);
  if (component.count() < static_cast<std::size_t>(std::max(min_fg_area, 1))) return empty;
  return fill_holes(component);
}

std::optional<Box> compute_box(const Mask2D& fg, int margin) {
  int x0 = fg.width, y0 = fg.height, x1 = -1, y1 = -1;
  for (int y = 0; y < fg.height; ++y) {
    for (int x = 0; x < fg.width; ++x) {
      if (!fg.at(x, y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return Box{std::max(x0 - margin, 0), std::max(y0 - margin, 0), std::min(x1 + margin, fg.width - 1),
             std::min(y1 + margin, fg.height - 1)};
}

namespace {

struct Candidate {
  int score;  // higher is better
  Point p;
};

// Greedy pick in (score desc, y asc, x asc) order, keeping picks at least
// `separation` apart in Chebyshev distance.
std::vector<Point> pick_separated(std::vector<Candidate>& cands, int count, int separation) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.p.y != b.p.y) return a.p.y < b.p.y;
    return a.p.x < b.p.x;
  });
  std::vector<Point> picked;
  for (const Candidate& c : cands) {
    if (static_cast<int>(picked.size()) >= count) break;
    const bool far_enough = std::all_of(picked.begin(), picked.end(), [&](const Point& q) {
      return std::max(std::abs(q.x - c.p.x), std::abs(q.y - c.p.y)) >= separation;
    });
    if (far_enough) picked.push_back(c.p);
  }
  return picked;
}

}  // namespace

PromptSet place_markers(const SliceImage& slice, const Mask2D& fg, const Box& box, const PromptConfig& cfg) {
  cfg.validate();
  if (fg.width != slice.width || fg.height != slice.height) {
    throw Error(ErrorCode::ShapeMismatch, "foreground mask does not match the slice");
  }
  PromptSet out;
  out.box = box;

  const auto depth = chessboard_distance(fg);
  std::vector<Candidate> inner;
  for (int y = box.y0; y <= box.y1; ++y) {
    for (int x = box.x0; x <= box.x1; ++x) {
      const int d = depth[static_cast<std::size_t>(y) * fg.width + x];
      if (d > 0) inner.push_back({d, {x, y}});
    }
  }
  if (inner.empty()) throw Error(ErrorCode::EmptyForeground, "no foreground pixel inside the box");
  out.inclusions = pick_separated(inner, cfg.k_inc, cfg.rim_width);

  if (cfg.k_exc > 0) {
    const Mask2D near_fg = dilate(fg, cfg.rim_width);
    const int reach = 2 * cfg.rim_width;
    const int ex0 = std::max(box.x0 - reach, 0), ey0 = std::max(box.y0 - reach, 0);
    const int ex1 = std::min(box.x1 + reach, slice.width - 1), ey1 = std::min(box.y1 + reach, slice.height - 1);
    std::vector<Candidate> rim;
    for (int y = ey0; y <= ey1; ++y)
      for (int x = ex0; x <= ex1; ++x)
        if (!near_fg.at(x, y)) rim.push_back({slice.at(x, y), {x, y}});
    out.exclusions = pick_separated(rim, cfg.k_exc, cfg.rim_width);
  }
  return out;
}

std::optional<PromptSet> generate_prompt(const SliceImage& slice, const PromptConfig& cfg) {
  const Mask2D fg = estimate_foreground(slice, cfg.min_fg_area);
  const auto box = compute_box(fg, cfg.margin);
  if (!box) return std::nullopt;
  return place_markers(slice, fg, *box, cfg);
}

std::vector<SlicePrompt> generate_prompts(std::span<const SliceImage> slices, const PromptConfig& cfg) {
  cfg.validate();
  std::vector<SlicePrompt> out;
  out.reserve(slices.size());
  for (const SliceImage& s : slices) out.push_back({s.index, generate_prompt(s, cfg)});
  return out;
}

}  // namespace brainprompt
