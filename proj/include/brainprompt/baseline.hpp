#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "brainprompt/volume.hpp"

namespace brainprompt {

enum class BaselineMode { Builtin, External };

struct BaselineConfig {
  double f = 0.5;  // fractional intensity threshold, in (0, 1)
  std::optional<std::filesystem::path> executable_path;
  BaselineMode mode = BaselineMode::Builtin;

  void validate() const;  // throws InvalidConfig
  std::string identity() const;
};

/// Voxels strictly above robust_min + f * (robust_max - robust_min), where
/// the robust range is the 1%/99% quantile pair. Larger f keeps fewer voxels.
Mask3D baseline_threshold(const Volume& volume, double f);

/// Classical stand-in for BET: threshold, 6-connected opening, largest
/// 6-connected component, then fill enclosed cavities smaller than that
/// component. Throws EmptyResult when nothing survives.
Mask3D builtin_baseline(const Volume& volume, const BaselineConfig& cfg);

/// Invokes `<executable> <input> <workdir>/<stem>_bet -f <f> -m` and loads
/// `<workdir>/<stem>_bet_mask.nii.gz`. Throws ExecutableNotFound,
/// ProcessError(ToolFailed) with the tool's stderr, or OutputMissing.
Mask3D run_external_bet(const std::filesystem::path& input, const BaselineConfig& cfg,
                        const std::filesystem::path& workdir);

}  // namespace brainprompt
