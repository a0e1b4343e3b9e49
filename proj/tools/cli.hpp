#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "brainprompt/baseline.hpp"
#include "brainprompt/phantom.hpp"
#include "brainprompt/pipeline.hpp"

namespace brainprompt::cli {

enum class BackendKind { Reference, Process };

struct PhantomOptions {
  Dims dims{96, 96, 96};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool lesion = false;

  PhantomSpec spec() const;
};

/// Everything a run depends on. Precedence: built-in defaults, then the
/// --config JSON document, then command-line flags.
struct RunConfig {
  std::optional<std::filesystem::path> input;
  std::optional<PhantomOptions> phantom;  // used when no input path is given
  std::string target = "native";          // "native" or a template NIfTI path
  Axis axis = Axis::Axial;
  double window_lo = 0.01;
  double window_hi = 0.99;
  PromptConfig prompts;
  BackendKind backend = BackendKind::Reference;
  std::string backend_command;  // run through /bin/sh when backend == Process
  int tolerance = ReferenceBackendConfig{}.tolerance;
  double timeout_s = 120.0;
  BaselineConfig baseline;
  std::optional<std::filesystem::path> gt;  // path or "template-mask"
  std::optional<std::filesystem::path> template_mask;
  std::optional<std::filesystem::path> manual_prompts;
  std::filesystem::path out = "out";
  int parallelism = 1;

  /// Throws InvalidConfig or Io for missing referenced paths.
  void validate(bool needs_input) const;
  nlohmann::json to_json() const;
  /// Overlays the keys present in `j`.
  void apply_json(const nlohmann::json& j);
};

/// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

BackendFactory make_backend_factory(const RunConfig& cfg);

/// Entry point shared by the executable and the tests. Returns the process
/// exit status; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brainprompt::cli
