#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vand/core.hpp"
#include "vand/scoring.hpp"

namespace vand::aggregate {

struct SampleResult {
    std::string sample_id;
    ScoreMap anomaly_map;  // image resolution
    double sample_score = 0.0;
    std::vector<std::pair<int, double>> component_scores;
    std::vector<scoring::TileScore> tile_scores;
};

/// Elementwise product with the tile score.
ScoreMap scale_tile_map(const ScoreMap& pixel_map, double tile_score);

/// Per pixel mean over the tiles covering it; uncovered pixels are 0.
ScoreMap stitch(std::span<const std::pair<TilePlan, ScoreMap>> scaled_maps, Dims image);

/// Mean tile score of one component.
double component_score(std::span<const scoring::TileScore> tile_scores, int component_id);

/// Mean of the k = ceil(top_fraction * n) highest component scores.
double sample_score(std::span<const double> component_scores, double top_fraction);

/// Number of scores averaged by sample_score.
std::size_t top_count(std::size_t n, double top_fraction);

}  // namespace vand::aggregate
