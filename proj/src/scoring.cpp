#include "vand/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace vand::scoring {

double mean_alignment(const backends::Embedding& image, std::span<const backends::Embedding> prompts) {
    if (prompts.empty()) throw ContractError("mean_alignment: no prompt embeddings");
    double sum = 0.0;
    for (const auto& p : prompts) sum += backends::cosine(image, p);
    return std::clamp(sum / static_cast<double>(prompts.size()), -1.0, 1.0);
}

double softmax_score(double s_normal, double s_abnormal, double temperature) {
    if (!(temperature > 0.0)) throw ContractError("temperature must be > 0");
    const double z = (s_abnormal - s_normal) / temperature;
    // Both branches evaluate the small tail e / (1 + e) directly, which keeps
    // full resolution next to 0 and (via 1 - tail) next to 1.
    const double e = std::exp(-std::abs(z));
    const double tail = e / (1.0 + e);
    return z >= 0.0 ? 1.0 - tail : tail;
}

TileScore tile_score(const backends::Embedding& image, std::span<const backends::Embedding> normal,
                     std::span<const backends::Embedding> abnormal, double temperature) {
    if (normal.empty() || abnormal.empty()) throw ContractError("tile_score: empty prompt set");
    TileScore t;
    t.s_normal = mean_alignment(image, normal);
    t.s_abnormal = mean_alignment(image, abnormal);
    t.score = softmax_score(t.s_normal, t.s_abnormal, temperature);
    return t;
}

ScoreMap harmonic_pool(std::span<const ScoreMap> maps, double epsilon) {
    if (maps.empty()) throw ContractError("harmonic_pool: no maps");
    if (!(epsilon > 0.0)) throw ContractError("harmonic_pool: epsilon must be > 0");
    const ScoreMap& first = maps.front();
    for (const auto& m : maps) {
        if (!m.same_shape(first)) throw ContractError("harmonic_pool: map dimensions differ");
    }

    const double n = static_cast<double>(maps.size());
    RealRaster out(first.height(), first.width());
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double v0 = std::max(first.values()[i], epsilon);
        bool all_equal = true;
        double inv_sum = 0.0;
        for (const auto& m : maps) {
            const double v = std::max(m.values()[i], epsilon);
            all_equal = all_equal && v == v0;
            inv_sum += 1.0 / v;
        }
        // The harmonic mean of equal values is that value; skip the rounding.
        dst[i] = all_equal ? v0 : n / inv_sum;
    }
    return normalize_map(out);
}

ScoreMap tile_pixel_map(const Image& tile, std::span<const std::string> localizing_prompts,
                        backends::PromptSegmenter& segmenter, const PipelineConfig& config) {
    if (localizing_prompts.empty()) throw ContractError("tile_pixel_map: no localizing prompts");
    std::vector<ScoreMap> maps;
    maps.reserve(localizing_prompts.size());
    for (const auto& prompt : localizing_prompts) {
        try {
            ScoreMap m = segmenter.segment_by_prompt(tile, prompt);
            if (m.height() != tile.height() || m.width() != tile.width()) {
                throw ContractError("segmentation has the wrong dimensions");
            }
            maps.push_back(std::move(m));
        } catch (const backends::TransportError& e) {
            throw backends::TransportError("segment_by_prompt(\"" + prompt + "\") on " + std::to_string(tile.width()) +
                                           "x" + std::to_string(tile.height()) + " tile: " + e.what());
        } catch (const ContractError& e) {
            throw ContractError("segment_by_prompt(\"" + prompt + "\") on " + std::to_string(tile.width()) + "x" +
                                std::to_string(tile.height()) + " tile: " + e.what());
        }
    }
    return harmonic_pool(maps, config.harmonic_epsilon);
}

}  // namespace vand::scoring
