#include "brainprompt/baseline.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <unistd.h>

#include "brainprompt/morphology.hpp"
#include "brainprompt/nifti.hpp"
#include "brainprompt/slicing.hpp"
#include "brainprompt/subprocess.hpp"

namespace brainprompt {
namespace {

std::string format_f(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

}  // namespace

void BaselineConfig::validate() const {
  if (!(f > 0.0 && f < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "fractional intensity threshold f must lie in (0, 1), got " + format_f(f));
  }
}

std::string BaselineConfig::identity() const {
  if (mode == BaselineMode::Builtin) return "builtin-threshold-baseline(f=" + format_f(f) + ")";
  return "external-bet(" + (executable_path ? executable_path->string() : std::string("?")) + ", f=" +
         format_f(f) + ")";
}

Mask3D baseline_threshold(const Volume& volume, double f) {
  const auto data = volume.data();
  const double lo = quantile(data, 0.01);
  const double hi = quantile(data, 0.99);
  const double t = lo + f * (hi - lo);
  std::vector<std::uint8_t> bits(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) bits[i] = data[i] > t ? 1 : 0;
  return Mask3D(volume.grid(), std::move(bits));
}

Mask3D builtin_baseline(const Volume& volume, const BaselineConfig& cfg) {
  cfg.validate();
  const Mask3D above = baseline_threshold(volume, cfg.f);
  if (above.count() == 0) throw Error(ErrorCode::EmptyResult, "no voxel exceeds the baseline threshold");
  const Mask3D kept = largest_component6(open6(above));
  const std::size_t size = kept.count();
  if (size == 0) throw Error(ErrorCode::EmptyResult, "nothing survives the morphological opening");
  return fill_holes(kept, size - 1);
}

Mask3D run_external_bet(const std::filesystem::path& input, const BaselineConfig& cfg,
                        const std::filesystem::path& workdir) {
  cfg.validate();
  if (cfg.mode != BaselineMode::External) throw Error(ErrorCode::InvalidConfig, "baseline mode is not external");
  if (!cfg.executable_path || !std::filesystem::is_regular_file(*cfg.executable_path) ||
      ::access(cfg.executable_path->c_str(), X_OK) != 0) {
    throw Error(ErrorCode::ExecutableNotFound,
                "BET executable not found: " + (cfg.executable_path ? cfg.executable_path->string() : "<unset>"));
  }
  if (!std::filesystem::exists(input)) throw Error(ErrorCode::Io, "no such file: " + input.string());
  std::filesystem::create_directories(workdir);

  std::string stem = input.filename().string();
  for (const char* ext : {".gz", ".nii"}) {
    if (stem.size() > std::strlen(ext) && stem.ends_with(ext)) stem.resize(stem.size() - std::strlen(ext));
  }
  const auto prefix = workdir / (stem + "_bet");
  const auto mask_path = std::filesystem::path(prefix.string() + "_mask.nii.gz");
  std::filesystem::remove(mask_path);

  const ProcessResult r =
      run_process({cfg.executable_path->string(), input.string(), prefix.string(), "-f", format_f(cfg.f), "-m"});
  if (r.exit_status != 0) {
    throw ProcessError(ErrorCode::ToolFailed,
                       "BET exited with status " + std::to_string(r.exit_status) + (r.err.empty() ? "" : ": " + r.err),
                       r.exit_status, r.err);
  }
  if (!std::filesystem::exists(mask_path)) {
    throw Error(ErrorCode::OutputMissing, "BET did not produce " + mask_path.string());
  }
  return read_nifti_mask(mask_path);
}

}  // namespace brainprompt
