#pragma once

#include <vector>

#include "vand/core.hpp"

namespace vand::tiling {

/// True when the component is tiled as a strip along its long axis rather
/// than with one square: elongated past `elongation_ratio` and made of more
/// than `part_count_threshold` parts.
bool uses_strip_rule(const ForegroundComponent& component, const PipelineConfig& config);

/// Square windows for one component, ordered along the long axis.
///
/// Default rule: one square of side max(min_tile_side, longest bbox side),
/// centred on the bbox centre (rounded down).
///
/// Strip rule: squares of side max(min_tile_side, short side) whose centres
/// sweep the long axis from the first bbox pixel to the last in steps of
/// half the short side (floor, at least 1). The final step is shortened so
/// the last centre lands on the bbox end. Each window is centred on the
/// short axis.
///
/// All windows are passed through clamp_window; consecutive duplicates
/// created by clamping are collapsed.
std::vector<TilePlan> plan_tiles(const ForegroundComponent& component, Dims image, const PipelineConfig& config);

/// Pixel-exact crop. Throws ContractError when the window leaves the image.
Image extract_tile(const Image& image, const TilePlan& plan);

}  // namespace vand::tiling
