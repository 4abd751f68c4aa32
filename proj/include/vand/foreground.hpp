#pragma once

#include <vector>

#include "vand/core.hpp"

namespace vand::foreground {

/// Candidate region masks for one image, possibly overlapping.
using ProposalSet = std::vector<BinaryMask>;

/// Keeps proposals whose fraction of pixels inside `salient` is at least
/// `coverage_threshold`. Order is preserved. Empty proposals are dropped.
ProposalSet filter_proposals(const ProposalSet& proposals, const BinaryMask& salient, double coverage_threshold);

/// Pixelwise union. `dims` sizes the all-false result for an empty set.
BinaryMask merge_foreground(const ProposalSet& kept, Dims dims);

/// Components in raster-scan order of their first pixel; ids 0, 1, ...
/// part_count is left at zero.
std::vector<ForegroundComponent> connected_components(const BinaryMask& mask, int connectivity);

/// Proposals with at least `overlap_fraction` of their pixels inside the component.
int count_parts(const ForegroundComponent& component, const ProposalSet& proposals, double overlap_fraction);

/// Tight bounding box of the set pixels; nullopt for an all-false mask.
std::optional<BBox> tight_bbox(const BinaryMask& mask);

/// Foreground extraction end to end: filter, merge, split and count parts
/// against the kept proposals. An empty foreground yields a single
/// full-frame component so later stages always have something to tile.
std::vector<ForegroundComponent> extract_components(const ProposalSet& proposals, const BinaryMask& salient,
                                                    const PipelineConfig& config);

}  // namespace vand::foreground
