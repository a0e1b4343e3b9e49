#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "brainprompt/backend.hpp"
#include "brainprompt/prompts.hpp"
#include "brainprompt/slicing.hpp"

namespace brainprompt {

struct ExtractOptions {
  Axis axis = Axis::Axial;
  double window_lo = 0.01;
  double window_hi = 0.99;
  PromptConfig prompts;
  int parallelism = 1;
  std::optional<GridSpec> target_grid;  // resampled onto, trilinear
  // When set, replaces generated prompts: only the listed slices are segmented.
  std::optional<std::map<int, PromptSet>> manual_prompts;
};

/// Builds one backend per worker.
using BackendFactory = std::function<std::unique_ptr<SegmentBackend>()>;

struct StageTimings {
  double resample_s = 0.0;
  double decompose_s = 0.0;
  double prompts_s = 0.0;
  double segment_s = 0.0;
  double reconstruct_s = 0.0;
  double total_s = 0.0;
};

struct ExtractResult {
  Mask3D mask;
  std::vector<SlicePrompt> prompts;
  Window window;
  StageTimings timings;
  std::string backend_identity;
  std::size_t backend_calls = 0;
};

/// resample -> window -> decompose -> prompts -> segment -> reconstruct.
/// Slices without prompts yield empty masks and never reach the backend.
/// The first error raised by any worker is rethrown after all workers stop.
ExtractResult extract_brain(const Volume& volume, const ExtractOptions& opts, const BackendFactory& factory);

/// Factory for the in-process reference backend.
BackendFactory reference_backend_factory(ReferenceBackendConfig cfg = {});

}  // namespace brainprompt
