#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "brainprompt/morphology.hpp"
#include "brainprompt/prompts.hpp"
#include "brainprompt/slicing.hpp"

namespace brainprompt {

struct MaskCandidate {
  Mask2D mask;
  double score = 0.0;  // in [0, 1]
};

/// A promptable 2D segmenter. Implementations may return several
/// candidates; segment() reduces them to one mask.
class SegmentBackend {
 public:
  virtual ~SegmentBackend() = default;

  virtual std::vector<MaskCandidate> predict(const SliceImage& slice, const PromptSet& prompts) = 0;

  /// Recorded in run metadata and report footnotes.
  virtual std::string identity() const = 0;
};

struct ReferenceBackendConfig {
  int tolerance = 25;  // max 8-bit step between a pixel and its admitting neighbour
  Connectivity2D connectivity = Connectivity2D::Four;

  void validate() const;
};

/// Seeded region growing from every inclusion point. A pixel joins when it
/// is connected to the region, inside the box, not a barrier, within
/// `tolerance` of its admitting neighbour and within 2*tolerance of the
/// seed. Exclusion points and their 8 neighbours are barriers. The union
/// over seeds is returned with holes filled. Throws EmptyPromptSet.
Mask2D reference_segment(const SliceImage& slice, const PromptSet& prompts,
                         const ReferenceBackendConfig& cfg = {});

/// Deterministic in-process backend wrapping reference_segment.
class ReferenceBackend final : public SegmentBackend {
 public:
  explicit ReferenceBackend(ReferenceBackendConfig cfg = {});

  std::vector<MaskCandidate> predict(const SliceImage& slice, const PromptSet& prompts) override;
  std::string identity() const override;

 private:
  ReferenceBackendConfig cfg_;
};

/// Index of the highest-scoring candidate that covers at least half of the
/// inclusion points, falling back to the highest score overall. Ties keep
/// the earlier candidate. Throws ProtocolError on an empty list.
std::size_t select_candidate(std::span<const MaskCandidate> candidates, std::span<const Point> inclusions);

/// Runs the backend, selects one candidate and zeroes everything outside
/// the prompt box. Throws EmptyPromptSet when there are no inclusions.
Mask2D segment(const SliceImage& slice, const PromptSet& prompts, SegmentBackend& backend);

}  // namespace brainprompt
