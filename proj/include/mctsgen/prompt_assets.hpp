#pragma once

#include <string_view>
#include <vector>

namespace mctsgen {

/// Version tag of the shipped prompt templates.
inline constexpr std::string_view kPromptAssetVersion = "v1";

/// Template text of a shipped prompt asset (file name without ".txt").
/// Throws std::out_of_range for unknown names.
std::string_view prompt_asset(std::string_view name);

std::vector<std::string_view> prompt_asset_names();

}  // namespace mctsgen
