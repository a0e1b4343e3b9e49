#include "brainprompt/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <iterator>
#include <optional>
#include <utility>

namespace brainprompt {

void ReferenceBackendConfig::validate() const {
  if (tolerance < 0 || tolerance > 255) {
    throw Error(ErrorCode::InvalidConfig, "tolerance must lie in [0, 255]");
  }
  if (connectivity != Connectivity2D::Four && connectivity != Connectivity2D::Eight) {
    throw Error(ErrorCode::InvalidConfig, "connectivity must be 4 or 8");
  }
}

Mask2D reference_segment(const SliceImage& slice, const PromptSet& prompts, const ReferenceBackendConfig& cfg) {
  cfg.validate();
  if (prompts.inclusions.empty()) throw Error(ErrorCode::EmptyPromptSet, "no inclusion points");
  validate_prompts(prompts, slice.width, slice.height);

  const int w = slice.width, h = slice.height;
  const Box& box = prompts.box;
  std::vector<std::uint8_t> barrier(slice.pixels.size(), 0);
  for (const Point& e : prompts.exclusions) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = e.x + dx, y = e.y + dy;
        if (x >= 0 && y >= 0 && x < w && y < h) barrier[static_cast<std::size_t>(y) * w + x] = 1;
      }
  }

  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int nbrs = static_cast<int>(cfg.connectivity);
  const int tol = cfg.tolerance;

  Mask2D region(w, h);
  // Components grown so far, per seed intensity. Seeds of equal intensity
  // share the admission rule, so a seed inside one of them adds nothing.
  std::vector<std::pair<int, std::vector<std::uint8_t>>> grown;
  std::vector<int> stack;
  for (const Point& seed : prompts.inclusions) {
    const auto s = static_cast<std::size_t>(seed.y) * w + seed.x;
    if (barrier[s]) continue;
    const int seed_value = slice.pixels[s];
    auto it = std::find_if(grown.begin(), grown.end(), [&](const auto& g) { return g.first == seed_value; });
    if (it == grown.end()) {
      grown.emplace_back(seed_value, std::vector<std::uint8_t>(slice.pixels.size(), 0));
      it = std::prev(grown.end());
    }
    std::vector<std::uint8_t>& visited = it->second;
    if (visited[s]) continue;
    visited[s] = 1;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      region.bits[static_cast<std::size_t>(p)] = 1;
      const int x = p % w, y = p / w;
      const int v = slice.pixels[static_cast<std::size_t>(p)];
      for (int n = 0; n < nbrs; ++n) {
        const int nx = x + kDx[n], ny = y + kDy[n];
        if (nx < box.x0 || nx > box.x1 || ny < box.y0 || ny > box.y1) continue;
        const auto q = static_cast<std::size_t>(ny) * w + nx;
        if (visited[q] || barrier[q]) continue;
        const int u = slice.pixels[q];
        if (std::abs(u - v) > tol || std::abs(u - seed_value) > 2 * tol) continue;
        visited[q] = 1;
        stack.push_back(static_cast<int>(q));
      }
    }
  }
  return fill_holes(region);
}

ReferenceBackend::ReferenceBackend(ReferenceBackendConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<MaskCandidate> ReferenceBackend::predict(const SliceImage& slice, const PromptSet& prompts) {
  return {MaskCandidate{reference_segment(slice, prompts, cfg_), 1.0}};
}

std::string ReferenceBackend::identity() const {
  return "reference-region-growing(tolerance=" + std::to_string(cfg_.tolerance) +
         ",connectivity=" + std::to_string(static_cast<int>(cfg_.connectivity)) + ")";
}

std::size_t select_candidate(std::span<const MaskCandidate> candidates, std::span<const Point> inclusions) {
  if (candidates.empty()) throw Error(ErrorCode::ProtocolError, "backend returned no candidates");
  auto covered = [&](const MaskCandidate& c) {
    std::size_t n = 0;
    for (const Point& p : inclusions)
      if (c.mask.contains(p.x, p.y) && c.mask.at(p.x, p.y)) ++n;
    return 2 * n >= inclusions.size();
  };
  std::optional<std::size_t> gated, best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!best || candidates[i].score > candidates[*best].score) best = i;
    if (covered(candidates[i]) && (!gated || candidates[i].score > candidates[*gated].score)) gated = i;
  }
  return gated ? *gated : *best;
}

Mask2D segment(const SliceImage& slice, const PromptSet& prompts, SegmentBackend& backend) {
  if (prompts.inclusions.empty()) throw Error(ErrorCode::EmptyPromptSet, "no inclusion points");
  validate_prompts(prompts, slice.width, slice.height);

  const auto candidates = backend.predict(slice, prompts);
  for (const MaskCandidate& c : candidates) {
    if (c.mask.width != slice.width || c.mask.height != slice.height ||
        c.mask.bits.size() != slice.pixels.size()) {
      throw Error(ErrorCode::ProtocolError, "candidate mask does not match the slice size");
    }
  }
  const std::size_t chosen = select_candidate(candidates, prompts.inclusions);

  const Box& b = prompts.box;
  Mask2D out(slice.width, slice.height);
  const Mask2D& m = candidates[chosen].mask;
  for (int y = b.y0; y <= b.y1; ++y)
    for (int x = b.x0; x <= b.x1; ++x) out.set(x, y, m.at(x, y) ? 1 : 0);
  return out;
}

}  // namespace brainprompt
