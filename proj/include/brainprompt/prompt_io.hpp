#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "brainprompt/prompts.hpp"

namespace brainprompt {

/// Prompt file, as written to prompts.json and accepted by --manual-prompts:
///
///   {"axis": "axial",
///    "slices": {"41": {"box": [x0, y0, x1, y1],
///                      "inclusions": [[x, y], ...],
///                      "exclusions": [[x, y], ...]}, ...}}
///
/// Slices without prompts are omitted. "axis" and "exclusions" are optional
/// on input.
struct PromptFile {
  std::optional<Axis> axis;
  std::map<int, PromptSet> slices;
};

std::string dump_prompt_file(const PromptFile& file);
std::string dump_prompt_file(std::span<const SlicePrompt> prompts, Axis axis);

/// Throws InvalidPrompt on schema violations.
PromptFile parse_prompt_file(std::string_view text);

}  // namespace brainprompt
