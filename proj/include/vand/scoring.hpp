#pragma once

#include <span>
#include <string>
#include <vector>

#include "vand/backends.hpp"
#include "vand/core.hpp"

namespace vand::scoring {

struct TileScore {
    TilePlan tile;
    double score = 0.5;     // [0,1]
    double s_normal = 0.0;  // [-1,1]
    double s_abnormal = 0.0;
};

/// Arithmetic mean of cos(image, prompt) over the prompts.
double mean_alignment(const backends::Embedding& image, std::span<const backends::Embedding> prompts);

/// Two-way softmax exp(s_a/t) / (exp(s_n/t) + exp(s_a/t)), evaluated as a
/// logistic in the difference so large |s_a - s_n| / t cannot overflow.
double softmax_score(double s_normal, double s_abnormal, double temperature);

TileScore tile_score(const backends::Embedding& image, std::span<const backends::Embedding> normal,
                     std::span<const backends::Embedding> abnormal, double temperature);

/// Per pixel: n / sum_i 1 / max(m_i, epsilon).
ScoreMap harmonic_pool(std::span<const ScoreMap> maps, double epsilon);

/// Harmonically pooled per-prompt segmentations of one tile.
ScoreMap tile_pixel_map(const Image& tile, std::span<const std::string> localizing_prompts,
                        backends::PromptSegmenter& segmenter, const PipelineConfig& config);

}  // namespace vand::scoring
